#pragma once

// Byzantine behaviours. Replica strategies override the hooks of
// ReplicaStrategy; the client strategy reacts to correct clients' requests.
// None of them can sign for anyone else: every signature still goes through
// the key ring as the corrupt process itself.

#include <algorithm>
#include <memory>
#include <set>
#include <string>

#include "fairledger/constructions.hpp"
#include "fairledger/rc.hpp"

namespace fairledger {

enum class ReplicaBehaviour { honest, censor, equivocate, silent };

inline std::string_view to_string(ReplicaBehaviour b) {
  switch (b) {
    case ReplicaBehaviour::honest:
      return "honest";
    case ReplicaBehaviour::censor:
      return "censor";
    case ReplicaBehaviour::equivocate:
      return "equivocate";
    case ReplicaBehaviour::silent:
      return "silent";
  }
  return "?";
}

inline std::optional<ReplicaBehaviour> parse_replica_behaviour(std::string_view s) {
  if (s == "honest") return ReplicaBehaviour::honest;
  if (s == "censor") return ReplicaBehaviour::censor;
  if (s == "equivocate") return ReplicaBehaviour::equivocate;
  if (s == "silent") return ReplicaBehaviour::silent;
  return std::nullopt;
}

enum class ClientBehaviour { none, spam_invalidator };

inline std::string_view to_string(ClientBehaviour b) {
  return b == ClientBehaviour::spam_invalidator ? "spam_invalidator" : "none";
}

inline std::optional<ClientBehaviour> parse_client_behaviour(std::string_view s) {
  if (s == "none") return ClientBehaviour::none;
  if (s == "spam_invalidator") return ClientBehaviour::spam_invalidator;
  return std::nullopt;
}

struct AdversarySpec {
  std::set<ReplicaId> corrupt_replicas;
  std::set<ClientId> corrupt_clients;
  ReplicaBehaviour replica_strategy = ReplicaBehaviour::honest;
  /// Clients whose transactions a censor deletes.
  std::set<ClientId> censor_targets;
  ClientBehaviour client_strategy = ClientBehaviour::none;
  /// Account credited by spam transfers.
  std::string spam_sink;
  SelectionKind rc_policy = SelectionKind::round_robin;
  friend bool operator==(const AdversarySpec&, const AdversarySpec&) = default;
};

/// Correct in every respect except that transactions of the target clients
/// never appear in anything it produces. As an aggregator it certifies only
/// sub-proposals free of target transactions when f+1 of them are at hand.
class CensorStrategy : public ReplicaStrategy {
 public:
  explicit CensorStrategy(std::set<ClientId> targets) : targets_(std::move(targets)) {}

  std::string_view name() const override { return "censor"; }

  std::vector<Transaction> shape(std::vector<Transaction> txs) const override {
    std::erase_if(txs, [&](const Transaction& tx) { return matches(tx); });
    return txs;
  }
  // Skipped at selection, so target requests never crowd out the rest.
  bool picks(const Transaction& tx) const override { return !matches(tx); }

  std::vector<SubProposal> certificate_entries(std::vector<SubProposal> received,
                                               const FrcParams& params) const override {
    std::vector<SubProposal> clean;
    for (const auto& sp : received) {
      if (std::none_of(sp.txs.begin(), sp.txs.end(), [&](const auto& tx) { return matches(tx); })) {
        clean.push_back(sp);
      }
    }
    if (clean.size() >= params.threshold()) return clean;
    return received;
  }

  bool matches(const Transaction& tx) const { return targets_.contains(tx.client); }

 private:
  std::set<ClientId> targets_;
};

/// Sends its genuine sub-proposal to even-numbered replicas and an empty one
/// to the others.
class EquivocateStrategy : public ReplicaStrategy {
 public:
  std::string_view name() const override { return "equivocate"; }
  std::optional<std::vector<Transaction>> sub_proposal_for(
      ReplicaId to, const std::vector<Transaction>& txs) const override {
    if (to.value % 2 == 0) return txs;
    return std::vector<Transaction>{};
  }
};

/// Sends nothing and inputs nothing.
class SilentStrategy : public ReplicaStrategy {
 public:
  std::string_view name() const override { return "silent"; }
  bool inputs_to_rc() const override { return false; }
  std::optional<std::vector<Transaction>> sub_proposal_for(
      ReplicaId, const std::vector<Transaction>&) const override {
    return std::nullopt;
  }
};

inline std::shared_ptr<const ReplicaStrategy> make_replica_strategy(const AdversarySpec& spec) {
  switch (spec.replica_strategy) {
    case ReplicaBehaviour::censor:
      return std::make_shared<CensorStrategy>(spec.censor_targets);
    case ReplicaBehaviour::equivocate:
      return std::make_shared<EquivocateStrategy>();
    case ReplicaBehaviour::silent:
      return std::make_shared<SilentStrategy>();
    case ReplicaBehaviour::honest:
      break;
  }
  return std::make_shared<ReplicaStrategy>();
}

/// The spammer's reaction to a correct client's request carrying `observed`:
/// a transfer draining the same account with the same nonce into `sink`, so
/// at most one of the two can ever be finalised. Under the set model there is
/// nothing to conflict with and the spammer just adds noise.
inline Payload spam_response(const AdversarySpec& spec, const Payload& observed,
                             const TxId& observed_id) {
  if (const auto* t = std::get_if<Transfer>(&observed)) {
    return Transfer{t->from, spec.spam_sink, t->amount, t->nonce};
  }
  return Note{"spam " + to_string(observed_id)};
}

}  // namespace fairledger
