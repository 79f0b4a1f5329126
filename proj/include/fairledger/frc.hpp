#pragma once

// Fair repeated consensus on top of repeated consensus.
//
// Each replica broadcasts its block's transactions as a signed sub-proposal.
// Once it holds sub-proposals for instance i from at least f+1 distinct
// senders (and has finished instance i-1), it fuses everything received so
// far for i and inputs the fused block to RC, carrying the aggregated
// sub-proposals as a certificate. RC only ever decides blocks whose
// certificate checks out, so each decided block includes at least one correct
// replica's contribution.

#include <map>
#include <set>
#include <string_view>

#include "fairledger/validity.hpp"

namespace fairledger {

struct FrcParams {
  std::uint32_t n{};
  std::uint32_t f{};
  std::uint32_t threshold() const { return f + 1; }
};

enum class CertificateFault {
  none,
  missing,
  wrong_instance,
  too_few_signers,
  duplicate_sender,
  unknown_sender,
  bad_signature,
  fusion_mismatch,
};

inline std::string_view to_string(CertificateFault f) {
  switch (f) {
    case CertificateFault::none:
      return "none";
    case CertificateFault::missing:
      return "missing certificate";
    case CertificateFault::wrong_instance:
      return "certificate for another instance";
    case CertificateFault::too_few_signers:
      return "fewer than f+1 signers";
    case CertificateFault::duplicate_sender:
      return "duplicate certificate sender";
    case CertificateFault::unknown_sender:
      return "certificate sender is not a replica";
    case CertificateFault::bad_signature:
      return "certificate signature does not verify";
    case CertificateFault::fusion_mismatch:
      return "transactions differ from the fusion of the certificate";
  }
  return "?";
}

struct CertificationContext {
  FrcParams params;
  const KeyRing& keys;
  const ValidityModel& validity;
  const FusionModel& fusion;
};

/// Certificate check for a block proposed at instance `prefix.size()`:
/// at least f+1 distinct replicas signed sub-proposals for that instance and
/// the block's transactions are exactly their fusion over `prefix_state`.
inline CertificateFault check_certificate(const CertificationContext& ctx,
                                          const ValidityModel::State& prefix_state,
                                          Instance instance, const Block& b) {
  if (!b.certificate) return CertificateFault::missing;
  const auto& cert = *b.certificate;
  if (cert.instance != instance) return CertificateFault::wrong_instance;
  std::set<ReplicaId> senders;
  for (const auto& e : cert.entries) {
    if (e.sender.value >= ctx.params.n) return CertificateFault::unknown_sender;
    if (e.instance != instance) return CertificateFault::wrong_instance;
    if (!senders.insert(e.sender).second) return CertificateFault::duplicate_sender;
    if (!verify_sub_proposal(ctx.keys, e)) return CertificateFault::bad_signature;
  }
  if (senders.size() < ctx.params.threshold()) return CertificateFault::too_few_signers;
  auto fused = ctx.fusion.fuse(ctx.validity, prefix_state, std::span<const SubProposal>(cert.entries));
  if (fused.txs != b.txs) return CertificateFault::fusion_mismatch;
  return CertificateFault::none;
}

/// Base chain validity of `prefix :: [b]` extended with the certificate check.
inline bool certified_valid_chain(const CertificationContext& ctx, const Chain& prefix,
                                  const Block& b) {
  auto s = state_after(ctx.validity, prefix);
  if (!s) return false;
  if (!valid_extension(ctx.validity, *s, b.txs)) return false;
  return check_certificate(ctx, *s, prefix.size(), b) == CertificateFault::none;
}

/// Per-replica sub-proposal bookkeeping.
class FrcLayer {
 public:
  FrcLayer(ReplicaId self, FrcParams params) : self_(self), params_(params) {}

  /// Last instance this replica has fused and input to RC.
  Instance done() const { return done_; }

  /// Stores a verified sub-proposal. Returns false if it is dropped: its
  /// instance is already done, or the sender already contributed to it.
  bool accept(const SubProposal& sp) {
    if (sp.instance <= done_) return false;
    auto& slot = received_[sp.instance];
    return slot.emplace(sp.sender, sp).second;
  }

  std::size_t received_count(Instance i) const {
    auto it = received_.find(i);
    return it == received_.end() ? 0 : it->second.size();
  }

  /// True when instance done+1 can be aggregated: enough senders, and the
  /// local chain already holds the output of instance done.
  bool ready(const Chain& local_chain) const {
    const Instance i = done_ + 1;
    return received_count(i) >= params_.threshold() && local_chain.size() >= i;
  }

  /// Everything received for instance done+1, in sender order; marks it done.
  std::vector<SubProposal> take_next() {
    const Instance i = done_ + 1;
    std::vector<SubProposal> out;
    if (auto it = received_.find(i); it != received_.end()) {
      for (auto& [sender, sp] : it->second) out.push_back(std::move(sp));
    }
    received_.erase(received_.begin(), received_.upper_bound(i));
    done_ = i;
    return out;
  }

  ReplicaId self() const { return self_; }
  const FrcParams& params() const { return params_; }

 private:
  ReplicaId self_;
  FrcParams params_;
  Instance done_ = 0;
  std::map<Instance, std::map<ReplicaId, SubProposal>> received_;
};

}  // namespace fairledger
