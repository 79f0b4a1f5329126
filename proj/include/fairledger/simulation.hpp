#pragma once

// The simulation engine: clients, replicas and the consensus service wired
// together over the simulated network. Everything observable is appended to
// the trace as it happens.

#include <algorithm>
#include <map>

#include "fairledger/scenario.hpp"
#include "fairledger/trace.hpp"

namespace fairledger {

struct RequestMsg {
  Transaction tx;
};
struct SubPropMsg {
  SubProposal sp;
};
struct OutputMsg {
  Instance instance{};
  Block block;
};
using Message = std::variant<RequestMsg, SubPropMsg, OutputMsg>;
using SimEnvelope = Envelope<Message>;
using SimScheduler = Scheduler<Message>;

class Simulation : private ReplicaServices {
 public:
  explicit Simulation(Scenario scenario, SimScheduler* scheduler = nullptr)
      : scenario_(std::move(scenario)),
        keys_(scenario_.seed),
        validity_(scenario_.validity_model()),
        net_(scenario_.clock(), scenario_.delay_policy(), mix64(scenario_.seed ^ 0x6e6574ull)),
        oracle_(scenario_.n, scenario_.adversary.corrupt_replicas,
                SelectionPolicy(scenario_.adversary.rc_policy, scenario_.n,
                                scenario_.adversary.corrupt_replicas,
                                mix64(scenario_.seed ^ 0x7263ull)),
                [this](const Chain& prefix, const Block& b) { return block_valid(prefix, b); },
                keys_) {
    if (!scenario_.construction) throw ConfigError("construction", "missing");
    validate(scenario_);
    net_.set_scheduler(scheduler);
    auto byzantine = make_replica_strategy(scenario_.adversary);
    auto honest = std::make_shared<const ReplicaStrategy>();
    for (std::uint32_t r = 0; r < scenario_.n; ++r) {
      ReplicaConfig cfg{ReplicaId{r}, *scenario_.construction, scenario_.max_block_size,
                        scenario_.horizon_instances, scenario_.frc_params()};
      const bool correct = scenario_.replica_correct(ReplicaId{r});
      replicas_.emplace_back(cfg, validity_, fusion_, keys_, correct ? honest : byzantine);
    }
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Scenario& scenario() const { return scenario_; }
  const KeyRing& keys() const { return keys_; }
  const ValidityModel& validity() const { return validity_; }
  const LedgerReplica& replica(ReplicaId r) const { return replicas_.at(r.value); }
  const RcOracle& consensus() const { return oracle_; }
  const Trace& trace() const { return trace_; }

  /// Longest common prefix of the correct replicas' chains.
  Chain read() const {
    std::vector<const Chain*> chains;
    for (const auto& r : replicas_) {
      if (scenario_.replica_correct(r.id())) chains.push_back(&r.chain());
    }
    return longest_common_prefix(chains);
  }

  /// Runs to completion and returns the trace.
  const Trace& run() {
    if (started_) return trace_;
    started_ = true;
    emit(ProcessId::consensus_service(), ScenarioRecord{encode(scenario_)});
    for (std::size_t k = 0; k < scenario_.workload.size(); ++k) {
      const auto& item = scenario_.workload[k];
      net_.schedule_timer(ProcessId::of(item.client), item.tick, k);
    }
    announce(Decision{0, ReplicaId{}, Block::genesis()});
    settle();

    bool cut = false;
    while (auto ev = net_.next()) {
      if (net_.now() > scenario_.max_ticks) {
        cut = true;
        if (std::holds_alternative<SimEnvelope>(*ev)) ++dropped_at_cut_;
        break;
      }
      if (auto* t = std::get_if<Timer>(&*ev)) {
        issue(scenario_.workload.at(t->tag));
      } else {
        deliver(std::get<SimEnvelope>(*ev));
      }
      settle();
    }
    const Instance decided = oracle_.chain().size() - 1;
    emit(ProcessId::consensus_service(),
         EndOfRun{decided >= scenario_.horizon_instances,
                  cut ? net_.in_flight() + dropped_at_cut_ : 0, decided});
    return trace_;
  }

 private:
  // ReplicaServices, always called while `acting_` is executing.
  Signature sign(std::string_view payload) override {
    return keys_.sign(ProcessId::of(acting_), payload, net_.executing());
  }

  void send_sub_proposal(ReplicaId to, SubProposal sp) override {
    const auto id = net_.send(ProcessId::of(acting_), ProcessId::of(to), SubPropMsg{sp});
    emit(ProcessId::of(acting_), SubPropSent{to, std::move(sp), id});
  }

  void rc_input(Instance i, Block b, std::vector<DroppedTx> dropped) override {
    emit(ProcessId::of(acting_), RcInput{i, b, std::move(dropped)});
    oracle_.input(acting_, i, std::move(b));
  }

  void pool_cleared(Instance i, std::vector<TxId> cleared) override {
    emit(ProcessId::of(acting_), PoolCleared{i, std::move(cleared)});
  }

  bool block_valid(const Chain& prefix, const Block& b) {
    if (uses_frc(*scenario_.construction)) {
      CertificationContext ctx{scenario_.frc_params(), keys_, validity_, fusion_};
      return certified_valid_chain(ctx, prefix, b);
    }
    auto s = state_after(validity_, prefix);
    return s && valid_extension(validity_, *s, b.txs);
  }

  template <class Body>
  void emit(ProcessId p, Body body) {
    trace_.push_back({net_.now(), p, EventBody{std::move(body)}});
  }

  void act_as(ProcessId p) {
    net_.set_executing(p);
    if (p.role == Role::replica) acting_ = ReplicaId{p.index};
  }

  /// Decides as many instances as the oracle allows. Corrupt replicas learn
  /// each decision at once and may react within the same step.
  void settle() {
    while (auto d = oracle_.try_decide()) {
      emit(ProcessId::consensus_service(), RcDecided{d->instance, d->block});
      announce(*d);
    }
  }

  void announce(const Decision& d) {
    for (std::uint32_t r = 0; r < scenario_.n; ++r) {
      const ReplicaId rid{r};
      if (scenario_.replica_correct(rid)) {
        act_as(ProcessId::consensus_service());
        net_.send(ProcessId::consensus_service(), ProcessId::of(rid),
                  OutputMsg{d.instance, d.block});
      } else {
        sync_outputs_.push_back({rid, d.instance, d.block});
      }
    }
    while (!sync_outputs_.empty()) {
      auto [rid, i, block] = std::move(sync_outputs_.front());
      sync_outputs_.erase(sync_outputs_.begin());
      act_as(ProcessId::of(rid));
      emit(ProcessId::of(rid), Output{i, block, 0, net_.now()});
      oracle_.acknowledge_output(rid, i);
      replicas_[rid.value].on_output(i, block, *this);
    }
  }

  void deliver(const SimEnvelope& e) {
    act_as(e.to);
    const ReplicaId rid{e.to.index};
    auto& replica = replicas_.at(rid.value);
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, RequestMsg>) {
            emit(e.to, ReqDelivered{m.tx, e.from, e.id, e.sent_at});
            replica.on_request(m.tx, *this);
          } else if constexpr (std::is_same_v<M, SubPropMsg>) {
            emit(e.to, SubPropDelivered{m.sp, e.id, e.sent_at});
            replica.on_sub_proposal(m.sp, *this);
          } else {
            emit(e.to, Output{m.instance, m.block, e.id, e.sent_at});
            oracle_.acknowledge_output(rid, m.instance);
            replica.on_output(m.instance, m.block, *this);
          }
        },
        e.payload);
  }

  std::vector<ProcessId> all_replicas() const {
    std::vector<ProcessId> out;
    for (std::uint32_t r = 0; r < scenario_.n; ++r) out.push_back(ProcessId::of(ReplicaId{r}));
    return out;
  }

  Transaction next_tx(ClientId c, Payload payload) {
    const auto seq = ++next_seq_[c];
    act_as(ProcessId::of(c));
    return make_transaction(keys_, c, seq, std::move(payload));
  }

  void issue(const WorkloadItem& item) {
    const ClientId c = item.client;
    act_as(ProcessId::of(c));
    const auto targets = all_replicas();
    if (!scenario_.client_correct(c)) {
      // A corrupt client's own workload goes out unguarded.
      auto tx = next_tx(c, item.payload);
      auto ids = net_.broadcast(ProcessId::of(c), targets, RequestMsg{tx});
      emit(ProcessId::of(c), RequestIssued{std::move(tx), true, std::move(ids)});
      return;
    }
    const Chain current = read();
    emit(ProcessId::of(c), ReadSnapshot{current.size(), current.tip_hash()});
    Payload payload = item.payload;
    if (item.next_nonce) {
      auto& t = std::get<Transfer>(payload);
      t.nonce = 1;
      if (validity_.account_model() != nullptr) {
        auto s = state_after(validity_, current);
        const auto& accounts = std::get<AccountModel::State>(*s).accounts;
        if (auto it = accounts.find(t.from); it != accounts.end()) t.nonce = it->second.next_nonce;
      }
    }
    auto tx = next_tx(c, std::move(payload));
    const bool valid = request_is_valid(validity_, current, tx);
    std::vector<std::uint64_t> ids;
    if (valid) ids = net_.broadcast(ProcessId::of(c), targets, RequestMsg{tx});
    emit(ProcessId::of(c), RequestIssued{tx, valid, std::move(ids)});
    if (valid) spam(tx);
  }

  void spam(const Transaction& observed) {
    const auto& adv = scenario_.adversary;
    if (adv.client_strategy != ClientBehaviour::spam_invalidator) return;
    for (auto spammer : adv.corrupt_clients) {
      auto tx = next_tx(spammer, spam_response(adv, observed.payload, observed.id()));
      auto ids = net_.broadcast(ProcessId::of(spammer), all_replicas(), RequestMsg{tx});
      emit(ProcessId::of(spammer), RequestIssued{std::move(tx), true, std::move(ids)});
    }
  }

  struct SyncOutput {
    ReplicaId replica;
    Instance instance;
    Block block;
  };

  Scenario scenario_;
  KeyRing keys_;
  ValidityModel validity_;
  FusionModel fusion_;
  Network<Message> net_;
  RcOracle oracle_;
  std::vector<LedgerReplica> replicas_;
  std::map<ClientId, std::uint64_t> next_seq_;
  std::vector<SyncOutput> sync_outputs_;
  ReplicaId acting_;
  Trace trace_;
  std::size_t dropped_at_cut_ = 0;
  bool started_ = false;
};

/// Runs `scenario` once and returns its trace.
inline Trace simulate(const Scenario& scenario, SimScheduler* scheduler = nullptr) {
  Simulation sim(scenario, scheduler);
  return sim.run();
}

}  // namespace fairledger
