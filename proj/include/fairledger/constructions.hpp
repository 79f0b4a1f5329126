#pragma once

// Ledger constructions over RC (BC-RC) and over FRC (BC-FRC).
//
// Both share the same replica: a FIFO pool of requested transactions that is
// cleared against every output block, and a FIFO scan that picks transactions
// valid at their position, up to the block size. The only difference is the
// layer the picked block is input to.

#include <memory>
#include <set>
#include <span>
#include <string_view>

#include "fairledger/frc.hpp"
#include "fairledger/trace.hpp"

namespace fairledger {

enum class Construction { bcrc, bcfrc, dlsmr_over_bcfrc };

inline std::string_view to_string(Construction c) {
  switch (c) {
    case Construction::bcrc:
      return "bcrc";
    case Construction::bcfrc:
      return "bcfrc";
    case Construction::dlsmr_over_bcfrc:
      return "dlsmr-over-bcfrc";
  }
  return "?";
}

inline std::optional<Construction> parse_construction(std::string_view s) {
  if (s == "bcrc") return Construction::bcrc;
  if (s == "bcfrc") return Construction::bcfrc;
  if (s == "dlsmr-over-bcfrc") return Construction::dlsmr_over_bcfrc;
  return std::nullopt;
}

inline bool uses_frc(Construction c) { return c != Construction::bcrc; }

class ReplicaPool {
 public:
  /// Appends `tx` unless a transaction with the same id is already pooled.
  bool add(const Transaction& tx) {
    if (!ids_.insert(tx.id()).second) return false;
    txs_.push_back(tx);
    return true;
  }

  /// Removes every pooled transaction whose id is in `finalised`.
  std::vector<TxId> clear(const std::set<TxId>& finalised) {
    std::vector<TxId> removed;
    std::erase_if(txs_, [&](const Transaction& tx) {
      if (!finalised.contains(tx.id())) return false;
      removed.push_back(tx.id());
      ids_.erase(tx.id());
      return true;
    });
    return removed;
  }

  /// FIFO scan keeping each transaction that is valid after the ones already
  /// kept, until `max_size` are kept.
  template <class Keep = bool (*)(const Transaction&)>
  std::vector<Transaction> select_fifo(const ValidityModel& model, ValidityModel::State state,
                                       std::size_t max_size,
                                       Keep keep = [](const Transaction&) { return true; }) const {
    std::vector<Transaction> picked;
    for (const auto& tx : txs_) {
      if (picked.size() >= max_size) break;
      if (keep(tx) && model.try_apply(state, tx)) picked.push_back(tx);
    }
    return picked;
  }

  bool contains(const TxId& id) const { return ids_.contains(id); }
  std::size_t size() const { return txs_.size(); }
  std::span<const Transaction> contents() const { return txs_; }

 private:
  std::vector<Transaction> txs_;
  std::set<TxId> ids_;
};

/// Read primitive and request guard of a correct client: a request is sent
/// only if the transaction is valid against the current chain.
inline bool request_is_valid(const ValidityModel& model, const Chain& current,
                             const Transaction& tx) {
  auto s = state_after(model, current);
  return s && model.admits(*s, tx);
}

/// Behaviour hooks of a replica. The base class is the correct behaviour;
/// Byzantine strategies override individual hooks.
class ReplicaStrategy {
 public:
  virtual ~ReplicaStrategy() = default;
  virtual std::string_view name() const { return "honest"; }
  /// Whether this replica inputs anything to RC at all.
  virtual bool inputs_to_rc() const { return true; }
  /// Transactions of any block or sub-proposal this replica produces.
  virtual std::vector<Transaction> shape(std::vector<Transaction> txs) const { return txs; }
  /// Pool transactions this replica is willing to pick up at all.
  virtual bool picks(const Transaction&) const { return true; }
  /// Sub-proposal content sent to `to`; nullopt sends nothing.
  virtual std::optional<std::vector<Transaction>> sub_proposal_for(
      ReplicaId /*to*/, const std::vector<Transaction>& txs) const {
    return txs;
  }
  /// Sub-proposals to certify out of all those received for the instance.
  virtual std::vector<SubProposal> certificate_entries(std::vector<SubProposal> received,
                                                       const FrcParams& /*params*/) const {
    return received;
  }
};

/// What a replica needs from its environment.
class ReplicaServices {
 public:
  virtual ~ReplicaServices() = default;
  virtual Signature sign(std::string_view payload) = 0;
  virtual void send_sub_proposal(ReplicaId to, SubProposal sp) = 0;
  virtual void rc_input(Instance i, Block b, std::vector<DroppedTx> dropped) = 0;
  virtual void pool_cleared(Instance i, std::vector<TxId> cleared) = 0;
};

struct ReplicaConfig {
  ReplicaId id;
  Construction construction = Construction::bcfrc;
  std::size_t max_block_size = 8;
  Instance horizon = 1;
  FrcParams frc;
};

class LedgerReplica {
 public:
  LedgerReplica(ReplicaConfig cfg, const ValidityModel& validity, const FusionModel& fusion,
                const KeyRing& keys, std::shared_ptr<const ReplicaStrategy> strategy)
      : cfg_(cfg),
        validity_(validity),
        fusion_(fusion),
        keys_(keys),
        strategy_(std::move(strategy)),
        tip_state_(validity.genesis_state()),
        frc_(cfg.id, cfg.frc) {}

  ReplicaId id() const { return cfg_.id; }
  const ReplicaStrategy& strategy() const { return *strategy_; }
  const Chain& chain() const { return chain_; }
  const ReplicaPool& pool() const { return pool_; }
  const FrcLayer& frc() const { return frc_; }
  Log smr_log() const { return flatten_chain_to_log(chain_); }
  /// Number of outputs processed, genesis included.
  Instance outputs_processed() const { return outputs_; }

  /// A REQ arrived. Unsigned or already finalised transactions are ignored.
  void on_request(const Transaction& tx, ReplicaServices&) {
    if (!verify_transaction(keys_, tx) || finalised_.contains(tx.id())) return;
    pool_.add(tx);
  }

  /// Output of instance `i` (instance 0 is the genesis block).
  void on_output(Instance i, const Block& b, ReplicaServices& svc) {
    ++outputs_;
    if (i == 0) {
      if (!b.is_genesis()) throw ProtocolError("instance 0 output is not the genesis block");
    } else {
      if (i != chain_.size()) {
        throw ProtocolError("r" + std::to_string(cfg_.id.value) + " got output " +
                            std::to_string(i) + " at chain length " + std::to_string(chain_.size()));
      }
      chain_.append(b);
      if (!validity_.try_apply_all(tip_state_, b.txs)) {
        tip_state_ = state_after(validity_, chain_).value_or(validity_.genesis_state());
      }
      for (const auto& tx : b.txs) finalised_.insert(tx.id());
      auto cleared = pool_.clear(finalised_);
      if (!cleared.empty()) svc.pool_cleared(i, std::move(cleared));
    }
    if (i < cfg_.horizon) input_next(i + 1, svc);
    if (uses_frc(cfg_.construction)) try_aggregate(svc);
  }

  void on_sub_proposal(const SubProposal& sp, ReplicaServices& svc) {
    if (!uses_frc(cfg_.construction) || !verify_sub_proposal(keys_, sp)) return;
    if (frc_.accept(sp)) try_aggregate(svc);
  }

 private:
  void input_next(Instance i, ReplicaServices& svc) {
    auto txs = strategy_->shape(pool_.select_fifo(validity_, tip_state_, cfg_.max_block_size,
                                                  [&](const Transaction& tx) { return strategy_->picks(tx); }));
    if (!uses_frc(cfg_.construction)) {
      if (!strategy_->inputs_to_rc()) return;
      Block b = next_block(chain_, std::move(txs));
      b.proposer_sig = svc.sign(signing_payload(b));
      svc.rc_input(i, std::move(b), {});
      return;
    }
    for (std::uint32_t r = 0; r < cfg_.frc.n; ++r) {
      auto content = strategy_->sub_proposal_for(ReplicaId{r}, txs);
      if (!content) continue;
      SubProposal sp{cfg_.id, i, std::move(*content), {}};
      sp.signature = svc.sign(signing_payload(sp));
      svc.send_sub_proposal(ReplicaId{r}, std::move(sp));
    }
  }

  void try_aggregate(ReplicaServices& svc) {
    while (frc_.ready(chain_) && frc_.done() < cfg_.horizon) {
      const Instance i = frc_.done() + 1;
      auto entries = strategy_->certificate_entries(frc_.take_next(), cfg_.frc);
      if (!strategy_->inputs_to_rc()) continue;
      const auto prefix_state =
          chain_.size() == i ? tip_state_ : state_after(validity_, chain_.prefix(i)).value();
      auto fused = fusion_.fuse(validity_, prefix_state, std::span<const SubProposal>(entries));
      Block b;
      b.parent = chain_.hash_at(i - 1);
      b.txs = strategy_->shape(std::move(fused.txs));
      b.certificate = Certificate{i, std::move(entries)};
      b.proposer_sig = svc.sign(signing_payload(b));
      svc.rc_input(i, std::move(b), std::move(fused.dropped));
    }
  }

  ReplicaConfig cfg_;
  const ValidityModel& validity_;
  const FusionModel& fusion_;
  const KeyRing& keys_;
  std::shared_ptr<const ReplicaStrategy> strategy_;
  Chain chain_;
  ValidityModel::State tip_state_;
  std::set<TxId> finalised_;
  ReplicaPool pool_;
  FrcLayer frc_;
  Instance outputs_ = 0;
};

}  // namespace fairledger
