#pragma once

// Repeated consensus as a correct-by-construction decision service.
//
// Agreement, chain finality and chain validity hold because there is a single
// decided chain and only valid, signed proposals are ever appended to it. The
// one freedom a real protocol leaves to the adversary, namely which valid
// proposal wins an instance, is delegated to a SelectionPolicy.

#include <functional>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "fairledger/chain.hpp"

namespace fairledger {

enum class SelectionKind { round_robin, byzantine_favouring, uniform_random };

inline std::string_view to_string(SelectionKind k) {
  switch (k) {
    case SelectionKind::round_robin:
      return "round-robin";
    case SelectionKind::byzantine_favouring:
      return "byzantine-favouring";
    case SelectionKind::uniform_random:
      return "uniform-random";
  }
  return "?";
}

inline std::optional<SelectionKind> parse_selection_kind(std::string_view s) {
  if (s == "round-robin") return SelectionKind::round_robin;
  if (s == "byzantine-favouring") return SelectionKind::byzantine_favouring;
  if (s == "uniform-random") return SelectionKind::uniform_random;
  return std::nullopt;
}

struct Proposal {
  ReplicaId proposer;
  Block block;
};

class SelectionPolicy {
 public:
  SelectionPolicy(SelectionKind kind, std::uint32_t n, std::set<ReplicaId> corrupt,
                  std::uint64_t seed)
      : kind_(kind), n_(n), corrupt_(std::move(corrupt)), rng_(seed) {}

  SelectionKind kind() const { return kind_; }

  /// Picks one of `valid` (non-empty, ordered by proposer id then arrival).
  std::size_t choose(Instance i, std::span<const Proposal> valid) {
    switch (kind_) {
      case SelectionKind::byzantine_favouring:
        for (std::size_t k = 0; k < valid.size(); ++k) {
          if (corrupt_.contains(valid[k].proposer)) return k;
        }
        return round_robin(i, valid);
      case SelectionKind::uniform_random:
        return std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng_);
      case SelectionKind::round_robin:
      default:
        return round_robin(i, valid);
    }
  }

 private:
  std::size_t round_robin(Instance i, std::span<const Proposal> valid) const {
    const ReplicaId designated{static_cast<std::uint32_t>(i % n_)};
    for (std::size_t k = 0; k < valid.size(); ++k) {
      if (valid[k].proposer == designated) return k;
    }
    return 0;
  }

  SelectionKind kind_;
  std::uint32_t n_;
  std::set<ReplicaId> corrupt_;
  std::mt19937_64 rng_;
};

struct Decision {
  Instance instance{};
  ReplicaId proposer;
  Block block;
};

class RcOracle {
 public:
  /// Application-level validity of `block` as the successor of `prefix`
  /// (structure and proposer signature are checked by the oracle itself).
  using BlockValidator = std::function<bool(const Chain& prefix, const Block& block)>;

  enum class InputResult { registered, rejected_unsigned };

  RcOracle(std::uint32_t n, std::set<ReplicaId> corrupt, SelectionPolicy policy,
           BlockValidator validator, const KeyRing& keys)
      : n_(n),
        corrupt_(std::move(corrupt)),
        policy_(std::move(policy)),
        validator_(std::move(validator)),
        keys_(keys),
        last_input_(n, 0),
        last_output_(n, 0) {}

  bool is_correct(ReplicaId r) const { return !corrupt_.contains(r); }

  InputResult input(ReplicaId r, Instance i, Block b) {
    if (r.value >= n_) throw ProtocolError("input from unknown replica r" + std::to_string(r.value));
    if (!verify_block_signature(keys_, b) || b.proposer() != r) return InputResult::rejected_unsigned;
    if (is_correct(r)) {
      if (i != last_input_[r.value] + 1) {
        throw ProtocolError("r" + std::to_string(r.value) + " input instance " + std::to_string(i) +
                            " after instance " + std::to_string(last_input_[r.value]));
      }
      if (last_output_[r.value] + 1 < i) {
        throw ProtocolError("r" + std::to_string(r.value) + " input instance " + std::to_string(i) +
                            " before outputting instance " + std::to_string(i - 1));
      }
    }
    last_input_[r.value] = std::max(last_input_[r.value], i);
    if (i >= chain_.size()) pool_[i].push_back({r, std::move(b)});
    return InputResult::registered;
  }

  /// Records that replica `r` has processed output `i`.
  void acknowledge_output(ReplicaId r, Instance i) {
    last_output_.at(r.value) = std::max(last_output_.at(r.value), i);
  }

  /// Instance the oracle will decide next.
  Instance next_instance() const { return chain_.size(); }

  bool all_correct_entered(Instance i) const {
    for (std::uint32_t r = 0; r < n_; ++r) {
      if (is_correct(ReplicaId{r}) && last_input_[r] < i) return false;
    }
    return true;
  }

  /// Valid proposals for the next instance, ordered by proposer id.
  std::vector<Proposal> valid_proposals() const {
    std::vector<Proposal> out;
    auto it = pool_.find(next_instance());
    if (it == pool_.end()) return out;
    for (const auto& p : it->second) {
      if (p.block.parent == chain_.tip_hash() && validator_(chain_, p.block)) out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Proposal& a, const Proposal& b) { return a.proposer < b.proposer; });
    return out;
  }

  /// Decides the next instance if every correct replica has entered it and
  /// some registered proposal is valid.
  std::optional<Decision> try_decide() {
    const Instance i = next_instance();
    if (!all_correct_entered(i)) return std::nullopt;
    auto valid = valid_proposals();
    if (valid.empty()) return std::nullopt;
    const auto& pick = valid.at(policy_.choose(i, valid));
    Decision d{i, pick.proposer, pick.block};
    chain_.append(d.block);
    pool_.erase(i);
    return d;
  }

  const Chain& chain() const { return chain_; }

 private:
  std::uint32_t n_;
  std::set<ReplicaId> corrupt_;
  SelectionPolicy policy_;
  BlockValidator validator_;
  const KeyRing& keys_;
  std::vector<Instance> last_input_;
  std::vector<Instance> last_output_;
  std::map<Instance, std::vector<Proposal>> pool_;
  Chain chain_;
};

}  // namespace fairledger
