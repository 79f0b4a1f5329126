#pragma once

// Application validity predicates and the fusion function.
//
// Both models are folds: a chain is valid iff every transaction, applied in
// chain order from the genesis state, is admitted by the state accumulated so
// far. That makes validity deterministic and prefix-closed by construction.
// Transaction ids are unique in both models.

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fairledger/chain.hpp"

namespace fairledger {

struct AccountSpec {
  std::int64_t balance{};
  /// Clients allowed to debit the account; empty means anyone may.
  std::vector<ClientId> owners;
  friend bool operator==(const AccountSpec&, const AccountSpec&) = default;
};

/// Order-dependent model: transfers between named accounts, balances never go
/// negative, and each debited account's nonces run 1, 2, 3, ...
class AccountModel {
 public:
  struct Entry {
    std::int64_t balance{};
    std::uint64_t next_nonce = 1;
  };
  struct State {
    std::map<std::string, Entry, std::less<>> accounts;
    std::set<TxId> seen;
  };

  explicit AccountModel(std::map<std::string, AccountSpec> accounts)
      : accounts_(std::move(accounts)) {}

  static constexpr std::string_view kName = "account";

  const std::map<std::string, AccountSpec>& accounts() const { return accounts_; }

  State genesis_state() const {
    State s;
    for (const auto& [name, spec] : accounts_) s.accounts[name] = {spec.balance, 1};
    return s;
  }

  bool admits(const State& s, const Transaction& tx) const {
    const auto* t = std::get_if<Transfer>(&tx.payload);
    if (t == nullptr || t->amount <= 0) return false;
    if (s.seen.contains(tx.id())) return false;
    auto from = s.accounts.find(t->from);
    if (from == s.accounts.end() || !s.accounts.contains(t->to)) return false;
    const auto& owners = accounts_.at(t->from).owners;
    if (!owners.empty() &&
        std::find(owners.begin(), owners.end(), tx.client) == owners.end()) {
      return false;
    }
    return from->second.next_nonce == t->nonce && from->second.balance >= t->amount;
  }

  void apply(State& s, const Transaction& tx) const {
    const auto& t = std::get<Transfer>(tx.payload);
    auto& from = s.accounts.find(t.from)->second;
    from.balance -= t.amount;
    from.next_nonce += 1;
    s.accounts.find(t.to)->second.balance += t.amount;
    s.seen.insert(tx.id());
  }

 private:
  std::map<std::string, AccountSpec> accounts_;
};

/// Commutative model: the only rule is that no transaction id repeats.
class SetModel {
 public:
  struct State {
    std::set<TxId> seen;
  };
  static constexpr std::string_view kName = "set";

  State genesis_state() const { return {}; }
  bool admits(const State& s, const Transaction& tx) const { return !s.seen.contains(tx.id()); }
  void apply(State& s, const Transaction& tx) const { s.seen.insert(tx.id()); }
};

/// Runtime-selected validity model (a value type).
class ValidityModel {
 public:
  using State = std::variant<AccountModel::State, SetModel::State>;

  ValidityModel(AccountModel m) : impl_(std::move(m)) {}
  ValidityModel(SetModel m) : impl_(std::move(m)) {}

  std::string_view name() const {
    return std::visit([](const auto& m) { return std::decay_t<decltype(m)>::kName; }, impl_);
  }

  const AccountModel* account_model() const { return std::get_if<AccountModel>(&impl_); }

  State genesis_state() const {
    return std::visit([](const auto& m) -> State { return m.genesis_state(); }, impl_);
  }

  bool admits(const State& s, const Transaction& tx) const {
    return std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          return m.admits(std::get<typename M::State>(s), tx);
        },
        impl_);
  }

  void apply(State& s, const Transaction& tx) const {
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          m.apply(std::get<typename M::State>(s), tx);
        },
        impl_);
  }

  /// Applies `tx` if admitted; returns whether it was.
  bool try_apply(State& s, const Transaction& tx) const {
    if (!admits(s, tx)) return false;
    apply(s, tx);
    return true;
  }

  bool try_apply_all(State& s, std::span<const Transaction> txs) const {
    for (const auto& tx : txs) {
      if (!try_apply(s, tx)) return false;
    }
    return true;
  }

 private:
  std::variant<AccountModel, SetModel> impl_;
};

/// State after folding every block of `c`, or nullopt if the chain is
/// invalid.
inline std::optional<ValidityModel::State> state_after(const ValidityModel& model, const Chain& c) {
  auto s = model.genesis_state();
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (!model.try_apply_all(s, c[i].txs)) return std::nullopt;
  }
  return s;
}

inline bool valid_chain(const ValidityModel& model, const Chain& c) {
  return state_after(model, c).has_value();
}

/// Validity of a raw block sequence; structural defects throw
/// `StructuralError` rather than yielding false.
inline bool valid_chain(const ValidityModel& model, std::span<const Block> blocks) {
  return valid_chain(model, Chain::from_blocks(blocks));
}

inline bool valid_log(const ValidityModel& model, const Log& log) {
  auto s = model.genesis_state();
  return model.try_apply_all(s, log.txs);
}

/// Validity of `prefix` extended by one block holding `txs`.
inline bool valid_extension(const ValidityModel& model, const ValidityModel::State& prefix_state,
                            std::span<const Transaction> txs) {
  auto s = prefix_state;
  return model.try_apply_all(s, txs);
}

// ---------------------------------------------------------------------------
// Fusion

struct Contribution {
  ReplicaId contributor;
  std::span<const Transaction> txs;
};

struct DroppedTx {
  Transaction tx;
  /// Number of leading result transactions after which `tx` is invalid.
  std::size_t witness{};
  friend bool operator==(const DroppedTx&, const DroppedTx&) = default;
};

struct FusionResult {
  std::vector<Transaction> txs;
  std::vector<DroppedTx> dropped;
};

/// Deterministic merge of several transaction sequences into one valid
/// sequence. Contributions are taken in ascending contributor order and
/// concatenated; exact duplicates collapse onto their first occurrence; then a
/// left-to-right pass keeps each transaction iff it is valid after the
/// transactions kept so far. Every drop therefore has a witness position.
class FusionModel {
 public:
  static constexpr std::string_view kName = "contributor-order";
  std::string_view name() const { return kName; }

  FusionResult fuse(const ValidityModel& model, const ValidityModel::State& prefix_state,
                    std::span<const Contribution> collection) const {
    std::vector<const Contribution*> ordered;
    for (const auto& c : collection) ordered.push_back(&c);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
      return a->contributor < b->contributor;
    });

    FusionResult out;
    std::map<TxId, std::vector<const Transaction*>> seen;
    auto state = prefix_state;
    for (const auto* c : ordered) {
      for (const auto& tx : c->txs) {
        auto& same_id = seen[tx.id()];
        const bool duplicate = std::any_of(same_id.begin(), same_id.end(),
                                           [&](const Transaction* t) { return *t == tx; });
        if (duplicate) continue;
        same_id.push_back(&tx);
        if (model.try_apply(state, tx)) {
          out.txs.push_back(tx);
        } else {
          out.dropped.push_back({tx, out.txs.size()});
        }
      }
    }
    return out;
  }

  FusionResult fuse(const ValidityModel& model, const Chain& prefix,
                    std::span<const Contribution> collection) const {
    auto s = state_after(model, prefix);
    if (!s) throw std::invalid_argument("fusion prefix is not a valid chain");
    return fuse(model, *s, collection);
  }

  FusionResult fuse(const ValidityModel& model, const ValidityModel::State& prefix_state,
                    std::span<const SubProposal> entries) const {
    std::vector<Contribution> coll;
    coll.reserve(entries.size());
    for (const auto& e : entries) coll.push_back({e.sender, e.txs});
    return fuse(model, prefix_state, std::span<const Contribution>(coll));
  }
};

struct FairFusionVerdict {
  bool ok = true;
  std::optional<Transaction> violating;
};

/// Checks that every transaction of the collection missing from `result` is
/// invalid at some position of `result`.
inline FairFusionVerdict check_fair_fusion(const ValidityModel& model,
                                           const ValidityModel::State& prefix_state,
                                           std::span<const Contribution> collection,
                                           std::span<const Transaction> result) {
  // states[k] is the state after result[..k]; once the result itself turns
  // invalid every later position refutes any candidate.
  std::vector<ValidityModel::State> states;
  states.reserve(result.size() + 1);
  states.push_back(prefix_state);
  for (const auto& tx : result) {
    auto next = states.back();
    if (!model.try_apply(next, tx)) break;
    states.push_back(std::move(next));
  }
  const bool result_valid = states.size() == result.size() + 1;

  for (const auto& c : collection) {
    for (const auto& tx : c.txs) {
      if (std::find(result.begin(), result.end(), tx) != result.end()) continue;
      if (!result_valid) continue;
      const bool refuted = std::any_of(states.begin(), states.end(),
                                       [&](const auto& s) { return !model.admits(s, tx); });
      if (!refuted) return {false, tx};
    }
  }
  return {};
}

inline FairFusionVerdict check_fair_fusion(const ValidityModel& model, const Chain& prefix,
                                           std::span<const Contribution> collection,
                                           std::span<const Transaction> result) {
  auto s = state_after(model, prefix);
  if (!s) throw std::invalid_argument("fusion prefix is not a valid chain");
  return check_fair_fusion(model, *s, collection, result);
}

}  // namespace fairledger
