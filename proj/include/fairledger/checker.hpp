#pragma once

// Offline verdicts over a recorded trace.
//
// The checker trusts nothing in the trace except what processes did: chains
// are rebuilt from output events, validity and fusion are recomputed, and the
// keys are rebuilt from the seed in the scenario record. Liveness properties
// get a third verdict, horizon-inconclusive, when the finite trace can neither
// confirm nor refute them.

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "fairledger/scenario.hpp"
#include "fairledger/trace.hpp"

namespace fairledger {

enum class VerdictStatus { pass, violation, inconclusive, not_applicable };

inline std::string_view to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::pass:
      return "pass";
    case VerdictStatus::violation:
      return "violation";
    case VerdictStatus::inconclusive:
      return "horizon-inconclusive";
    case VerdictStatus::not_applicable:
      return "not-applicable";
  }
  return "?";
}

struct Verdict {
  std::string property;
  VerdictStatus status = VerdictStatus::pass;
  /// Indices into the trace; together with the scenario record they still
  /// exhibit the violation.
  std::vector<std::size_t> witness;
  std::string detail;
};

enum class FateKind { finalised, invalidated, starved, pending, suppressed };

inline std::string_view to_string(FateKind k) {
  switch (k) {
    case FateKind::finalised:
      return "finalised";
    case FateKind::invalidated:
      return "invalidated";
    case FateKind::starved:
      return "starved";
    case FateKind::pending:
      return "pending";
    case FateKind::suppressed:
      return "suppressed";
  }
  return "?";
}

/// What became of one transaction issued by a correct client.
struct TxFate {
  TxId id;
  FateKind kind = FateKind::pending;
  /// Instance of the block holding it, when finalised.
  std::optional<Instance> instance;
  /// Instances decided before every correct replica had received it.
  std::optional<Instance> decided_at_receipt;
};

inline const char* const kProperties[] = {
    "agreement",       "chain-finality",  "chain-validity", "termination",
    "valid-request",   "valid-input",     "request-agreement", "stubborn-input",
    "fair-fusion",     "fusion-validity", "user-fairness",  "log-safety",
    "log-validity",    "log-finality",    "log-user-fairness"};

struct CheckReport {
  Construction construction = Construction::bcfrc;
  std::uint64_t grace = 1;
  std::vector<Verdict> verdicts;
  std::vector<TxFate> fates;

  const Verdict& get(std::string_view property) const {
    for (const auto& v : verdicts) {
      if (v.property == property) return v;
    }
    throw std::out_of_range("no verdict for " + std::string(property));
  }

  bool any(VerdictStatus s) const {
    return std::any_of(verdicts.begin(), verdicts.end(), [&](const auto& v) { return v.status == s; });
  }

  /// 0 all pass, 1 some violation, 2 inconclusive only.
  int exit_code() const {
    if (any(VerdictStatus::violation)) return 1;
    if (any(VerdictStatus::inconclusive)) return 2;
    return 0;
  }

  const TxFate* fate(const TxId& id) const {
    for (const auto& f : fates) {
      if (f.id == id) return &f;
    }
    return nullptr;
  }
};

inline Json encode(const CheckReport& r) {
  Json j;
  j["construction"] = std::string(to_string(r.construction));
  j["grace"] = r.grace;
  Json vs = Json::array();
  for (const auto& v : r.verdicts) {
    Json vj;
    vj["property"] = v.property;
    vj["status"] = std::string(to_string(v.status));
    vj["witness"] = v.witness;
    vj["detail"] = v.detail;
    vs.push_back(std::move(vj));
  }
  j["verdicts"] = std::move(vs);
  Json fs = Json::array();
  for (const auto& f : r.fates) {
    Json fj;
    fj["tx"] = to_string(f.id);
    fj["fate"] = std::string(to_string(f.kind));
    fj["instance"] = f.instance ? Json(*f.instance) : Json();
    fj["decided_at_receipt"] = f.decided_at_receipt ? Json(*f.decided_at_receipt) : Json();
    fs.push_back(std::move(fj));
  }
  j["fates"] = std::move(fs);
  j["exit_code"] = r.exit_code();
  return j;
}

struct CheckOptions {
  /// Overrides the scenario's grace.
  std::optional<std::uint64_t> grace;
};

class TraceChecker {
 public:
  TraceChecker(const Trace& trace, CheckOptions options)
      : trace_(trace), scenario_(header(trace)), keys_(scenario_.seed),
        validity_(scenario_.validity_model()) {
    if (!scenario_.construction) throw TraceError("scenario record has no construction");
    grace_ = options.grace.value_or(scenario_.grace);
    if (grace_ < 1) throw ConfigError("grace", "must be at least 1");
    frc_ = uses_frc(*scenario_.construction);
    index();
  }

  CheckReport run() {
    CheckReport r;
    r.construction = *scenario_.construction;
    r.grace = grace_;
    r.verdicts.push_back(agreement());
    r.verdicts.push_back(chain_finality());
    r.verdicts.push_back(chain_validity());
    r.verdicts.push_back(termination());
    r.verdicts.push_back(valid_request());
    r.verdicts.push_back(valid_input());
    r.verdicts.push_back(request_agreement());
    r.verdicts.push_back(stubborn_input());
    r.verdicts.push_back(fair_fusion());
    r.verdicts.push_back(fusion_validity());
    r.verdicts.push_back(user_fairness("user-fairness", false, &r.fates));
    r.verdicts.push_back(log_safety());
    r.verdicts.push_back(log_validity());
    r.verdicts.push_back(log_finality());
    r.verdicts.push_back(user_fairness("log-user-fairness", true, nullptr));
    return r;
  }

 private:
  struct OutputRef {
    std::size_t event;
    Instance instance;
    const Block* block;
  };
  struct InputRef {
    std::size_t event;
    Instance instance;
    const std::vector<Transaction>* txs;
  };
  using State = ValidityModel::State;

  static Scenario header(const Trace& trace) {
    if (trace.empty() || trace.front().as<ScenarioRecord>() == nullptr) {
      throw TraceError("trace does not start with a scenario record");
    }
    try {
      return parse_scenario(trace.front().as<ScenarioRecord>()->scenario);
    } catch (const ConfigError& e) {
      throw TraceError(std::string("bad scenario record: ") + e.what());
    }
  }

  bool correct(ProcessId p) const {
    if (p.role == Role::replica) return p.index < scenario_.n && scenario_.replica_correct(ReplicaId{p.index});
    if (p.role == Role::client) return scenario_.client_correct(ClientId{p.index});
    return true;
  }

  std::vector<std::uint32_t> correct_replicas() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t r = 0; r < scenario_.n; ++r) {
      if (scenario_.replica_correct(ReplicaId{r})) out.push_back(r);
    }
    return out;
  }

  // ------------------------------------------------------------------------
  // One pass building every index the checks need.

  void index() {
    const auto n = scenario_.n;
    outputs_.assign(n, {});
    chains_.assign(n, Chain{});
    broken_.assign(n, false);
    inputs_.assign(n, {});
    lens_.assign(trace_.size(), {});
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      if (k > 0 && e.tick < trace_[k - 1].tick) {
        throw TraceError("event " + std::to_string(k) + " goes back in time");
      }
      const bool replica = e.process.role == Role::replica && e.process.index < n;
      const auto r = e.process.index;
      if (const auto* o = e.as<Output>(); o && replica && correct(e.process)) {
        outputs_[r].push_back({k, o->instance, &o->block});
        auto& c = chains_[r];
        if (!broken_[r] && o->instance > 0) {
          if (o->instance == c.size() && o->block.parent && *o->block.parent == c.tip_hash()) {
            c.append(o->block);
          } else if (o->instance >= c.size() || hash_block(o->block) != c.hash_at(o->instance)) {
            broken_[r] = true;
          }
        }
      } else if (const auto* in = e.as<RcInput>(); in && replica && correct(e.process)) {
        rc_inputs_.push_back(k);
        if (!frc_) inputs_[r].push_back({k, in->instance, &in->block.txs});
      } else if (const auto* sp = e.as<SubPropSent>(); sp && replica && correct(e.process)) {
        auto& list = inputs_[r];
        const auto i = sp->sub_proposal.instance;
        if (frc_ && std::none_of(list.begin(), list.end(), [&](const auto& x) { return x.instance == i; })) {
          list.push_back({k, i, &sp->sub_proposal.txs});
        }
      } else if (e.as<RcDecided>() != nullptr) {
        decided_.push_back(k);
      } else if (e.as<EndOfRun>() != nullptr) {
        end_ = k;
      }
      lens_[k].resize(n);
      for (std::uint32_t q = 0; q < n; ++q) lens_[k][q] = static_cast<std::uint32_t>(chains_[q].size());
    }
    states_.assign(n, {});
    for (auto r : correct_replicas()) {
      auto& st = states_[r];
      std::optional<State> s = validity_.genesis_state();
      st.push_back(s);
      for (std::size_t i = 1; i < chains_[r].size(); ++i) {
        if (s && !validity_.try_apply_all(*s, chains_[r][i].txs)) s.reset();
        st.push_back(s);
      }
    }
  }

  /// Length of the longest common prefix of the correct chains at event k.
  std::size_t lcp_at(std::size_t k) const {
    const auto rs = correct_replicas();
    if (rs.empty()) return 1;
    std::size_t len = SIZE_MAX;
    for (auto r : rs) len = std::min<std::size_t>(len, lens_[k][r]);
    const auto& ref = chains_[rs.front()];
    std::size_t i = 0;
    while (i < len && std::all_of(rs.begin(), rs.end(), [&](auto r) {
             return chains_[r].hash_at(i) == ref.hash_at(i);
           })) {
      ++i;
    }
    return std::max<std::size_t>(i, 1);
  }

  std::vector<std::size_t> outputs_before(std::uint32_t r, std::size_t k) const {
    std::vector<std::size_t> out;
    for (const auto& o : outputs_[r]) {
      if (o.event < k) out.push_back(o.event);
    }
    return out;
  }

  std::vector<std::size_t> correct_outputs_before(std::size_t k) const {
    std::vector<std::size_t> out;
    for (auto r : correct_replicas()) {
      auto part = outputs_before(r, k);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }

  static Verdict pass(std::string name) { return {std::move(name), VerdictStatus::pass, {}, {}}; }

  static Verdict violation(std::string name, std::vector<std::size_t> witness, std::string detail) {
    std::sort(witness.begin(), witness.end());
    witness.erase(std::unique(witness.begin(), witness.end()), witness.end());
    return {std::move(name), VerdictStatus::violation, std::move(witness), std::move(detail)};
  }

  static Verdict inconclusive(std::string name, std::string detail) {
    return {std::move(name), VerdictStatus::inconclusive, {}, std::move(detail)};
  }

  CertificationContext cert_ctx() const {
    return {scenario_.frc_params(), keys_, validity_, fusion_};
  }

  // ------------------------------------------------------------------------
  // Consensus-level properties

  Verdict agreement() const {
    std::map<Instance, std::pair<std::size_t, BlockHash>> first;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto* o = trace_[k].as<Output>();
      if (o == nullptr || trace_[k].process.role != Role::replica || !correct(trace_[k].process)) continue;
      const auto h = hash_block(o->block);
      auto [it, fresh] = first.try_emplace(o->instance, k, h);
      if (!fresh && it->second.second != h) {
        return violation("agreement", {it->second.first, k},
                         "two correct replicas output different blocks at instance " +
                             std::to_string(o->instance));
      }
    }
    return pass("agreement");
  }

  Verdict chain_finality() const {
    std::map<Instance, std::pair<std::size_t, BlockHash>> decided;
    for (auto k : decided_) {
      const auto* d = trace_[k].as<RcDecided>();
      const auto h = hash_block(d->block);
      auto [it, fresh] = decided.try_emplace(d->instance, k, h);
      if (!fresh && it->second.second != h) {
        return violation("chain-finality", {it->second.first, k},
                         "instance " + std::to_string(d->instance) + " decided twice");
      }
    }
    for (auto r : correct_replicas()) {
      std::map<Instance, std::pair<std::size_t, BlockHash>> seen;
      for (const auto& o : outputs_[r]) {
        const auto h = hash_block(*o.block);
        auto [it, fresh] = seen.try_emplace(o.instance, o.event, h);
        if (!fresh && it->second.second != h) {
          return violation("chain-finality", {it->second.first, o.event},
                           "r" + std::to_string(r) + " output two blocks at instance " +
                               std::to_string(o.instance));
        }
      }
    }
    return pass("chain-finality");
  }

  Verdict chain_validity() const {
    const auto ctx = cert_ctx();
    for (auto r : correct_replicas()) {
      Chain c;
      std::vector<std::size_t> seen;
      for (const auto& o : outputs_[r]) {
        seen.push_back(o.event);
        auto fail = [&](const std::string& why) {
          return violation("chain-validity", seen,
                           "r" + std::to_string(r) + " instance " + std::to_string(o.instance) + ": " + why);
        };
        const Instance expected = seen.size() - 1;
        if (o.instance != expected) {
          return fail("expected instance " + std::to_string(expected));
        }
        if (o.instance == 0) {
          if (!o.block->is_genesis()) return fail("first block is not the genesis block");
          continue;
        }
        if (!o.block->parent || *o.block->parent != c.tip_hash()) return fail("parent link broken");
        if (!verify_block_signature(keys_, *o.block) || o.block->proposer()->value >= scenario_.n) {
          return fail("no valid replica signature");
        }
        auto s = state_after(validity_, c);
        if (!s || !valid_extension(validity_, *s, o.block->txs)) return fail("transactions invalid");
        if (frc_) {
          auto fault = check_certificate(ctx, *s, o.instance, *o.block);
          if (fault != CertificateFault::none) return fail(std::string(to_string(fault)));
        }
        c.append(*o.block);
      }
    }
    return pass("chain-validity");
  }

  Verdict termination() const {
    if (!end_) return inconclusive("termination", "trace has no end record");
    const auto* e = trace_[*end_].as<EndOfRun>();
    if (!e->horizon_reached) {
      return inconclusive("termination", "decided " + std::to_string(e->decided) + " of " +
                                             std::to_string(scenario_.horizon_instances) +
                                             " instances before the tick limit");
    }
    return pass("termination");
  }

  // ------------------------------------------------------------------------
  // Construction-level properties

  Verdict valid_request() const {
    std::map<std::uint32_t, std::size_t> snapshot;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      if (e.process.role != Role::client || !correct(e.process)) continue;
      if (e.as<ReadSnapshot>() != nullptr) {
        snapshot[e.process.index] = k;
        continue;
      }
      const auto* req = e.as<RequestIssued>();
      if (req == nullptr) continue;
      auto it = snapshot.find(e.process.index);
      if (it == snapshot.end()) {
        if (!req->sent) continue;
        return violation("valid-request", {k}, to_string(req->tx.id()) + " sent without a read");
      }
      const std::size_t s = it->second;
      snapshot.erase(it);
      if (!req->sent) continue;
      const auto* snap = trace_[s].as<ReadSnapshot>();
      const auto len = lcp_at(s);
      const auto& ref = chains_[correct_replicas().front()];
      auto witness = correct_outputs_before(k);
      witness.push_back(s);
      witness.push_back(k);
      if (snap->length != len || snap->tip != ref.hash_at(len - 1)) {
        return violation("valid-request", witness,
                         "read of " + to_string(req->tx.id()) + " is not the current chain");
      }
      auto st = state_after(validity_, ref.prefix(len));
      if (!st || !validity_.admits(*st, req->tx)) {
        return violation("valid-request", witness,
                         to_string(req->tx.id()) + " sent although invalid against the current chain");
      }
    }
    return pass("valid-request");
  }

  Verdict valid_input() const {
    std::vector<std::vector<Transaction>> delivered(scenario_.n);
    std::vector<std::map<Instance, std::vector<SubProposal>>> subs(scenario_.n);
    auto received = [&](std::uint32_t r, const Transaction& tx) {
      const auto& d = delivered[r];
      return std::find(d.begin(), d.end(), tx) != d.end();
    };
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      if (e.process.role != Role::replica || !correct(e.process)) continue;
      const auto r = e.process.index;
      if (const auto* d = e.as<ReqDelivered>()) {
        delivered[r].push_back(d->tx);
      } else if (const auto* d = e.as<SubPropDelivered>()) {
        subs[r][d->sub_proposal.instance].push_back(d->sub_proposal);
      } else if (const auto* sp = e.as<SubPropSent>(); sp && frc_) {
        for (const auto& tx : sp->sub_proposal.txs) {
          if (!received(r, tx)) {
            return violation("valid-input", {k},
                             "r" + std::to_string(r) + " proposed " + to_string(tx.id()) +
                                 " without receiving a request for it");
          }
        }
      } else if (const auto* in = e.as<RcInput>()) {
        if (!frc_) {
          for (const auto& tx : in->block.txs) {
            if (!received(r, tx)) {
              return violation("valid-input", {k},
                               "r" + std::to_string(r) + " input " + to_string(tx.id()) +
                                   " without receiving a request for it");
            }
          }
        } else if (in->block.certificate) {
          const auto& got = subs[r][in->instance];
          for (const auto& entry : in->block.certificate->entries) {
            if (std::find(got.begin(), got.end(), entry) == got.end()) {
              return violation("valid-input", {k},
                               "r" + std::to_string(r) + " certified a sub-proposal of r" +
                                   std::to_string(entry.sender.value) + " it never received");
            }
          }
        }
      }
    }
    return pass("valid-input");
  }

  Verdict request_agreement() const {
    std::map<std::pair<TxId, std::uint32_t>, bool> got;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      if (const auto* d = e.as<ReqDelivered>(); d && correct(e.process) && e.process.role == Role::replica) {
        got[{d->tx.id(), e.process.index}] = true;
      }
    }
    const bool drained = end_ && trace_[*end_].as<EndOfRun>()->undelivered == 0;
    bool missing = false;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      const auto* req = e.as<RequestIssued>();
      if (req == nullptr || !req->sent || !correct(e.process)) continue;
      for (auto r : correct_replicas()) {
        if (got.contains({req->tx.id(), r})) continue;
        if (drained) {
          return violation("request-agreement", {k, *end_},
                           "r" + std::to_string(r) + " never received " + to_string(req->tx.id()));
        }
        missing = true;
      }
    }
    if (missing) return inconclusive("request-agreement", "requests still in flight at the tick limit");
    return pass("request-agreement");
  }

  /// True iff some position k of `txs` before `tx` itself makes
  /// prefix ⌢ (txs[..k] :: tx) invalid.
  bool invalid_somewhere(const std::optional<State>& prefix, const std::vector<Transaction>& txs,
                         const Transaction& tx) const {
    if (!prefix) return true;
    auto s = *prefix;
    bool s_valid = true;
    for (std::size_t k = 0; k <= txs.size(); ++k) {
      if (!s_valid || !validity_.admits(s, tx)) return true;
      if (k == txs.size() || txs[k] == tx) break;
      s_valid = validity_.try_apply(s, txs[k]);
    }
    return false;
  }

  bool in_chain(std::uint32_t r, const Transaction& tx) const {
    const auto& c = chains_[r];
    for (std::size_t i = 1; i < c.size(); ++i) {
      if (std::find(c[i].txs.begin(), c[i].txs.end(), tx) != c[i].txs.end()) return true;
    }
    return false;
  }

  Verdict stubborn_input() const {
    bool open = false;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      const auto* d = e.as<ReqDelivered>();
      if (d == nullptr || e.process.role != Role::replica || !correct(e.process)) continue;
      const auto r = e.process.index;
      if (in_chain(r, d->tx)) continue;  // (i)
      const Instance i = outputs_before(r, k).size();
      const InputRef* last = nullptr;
      bool justified = false;
      for (const auto& in : inputs_[r]) {
        // Only inputs made after the request arrived count.
        if (in.event < k || in.instance < i || in.instance > states_[r].size()) continue;
        if (invalid_somewhere(states_[r][in.instance - 1], *in.txs, d->tx)) {  // (ii)
          justified = true;
          break;
        }
        if (last == nullptr || in.instance > last->instance) last = &in;
      }
      if (justified) continue;
      if (last == nullptr) {
        open = true;
        continue;
      }
      if (std::find(last->txs->begin(), last->txs->end(), d->tx) != last->txs->end()) continue;  // (iii)
      if (last->txs->size() >= scenario_.max_block_size) {
        open = true;
        continue;
      }
      std::vector<std::size_t> witness{k, last->event};
      for (const auto& o : outputs_[r]) {
        if (o.instance < last->instance) witness.push_back(o.event);
      }
      return violation("stubborn-input", witness,
                       "r" + std::to_string(r) + " left pending valid " + to_string(d->tx.id()) +
                           " out of its input at instance " + std::to_string(last->instance));
    }
    if (open) return inconclusive("stubborn-input", "some requests arrived after the last input");
    return pass("stubborn-input");
  }

  /// Decided chain rebuilt from rc-decided events, with the event of each
  /// block.
  std::pair<Chain, std::vector<std::size_t>> decided_chain() const {
    Chain c;
    std::vector<std::size_t> events;
    for (auto k : decided_) {
      const auto* d = trace_[k].as<RcDecided>();
      if (d->instance != c.size() || !d->block.parent || *d->block.parent != c.tip_hash()) continue;
      c.append(d->block);
      events.push_back(k);
    }
    return {c, events};
  }

  Verdict fair_fusion() const {
    if (!frc_) return {"fair-fusion", VerdictStatus::not_applicable, {}, "no fusion layer"};
    auto [c, events] = decided_chain();
    auto s = validity_.genesis_state();
    for (std::size_t i = 1; i < c.size(); ++i) {
      const auto& b = c[i];
      if (b.certificate) {
        std::vector<Contribution> coll;
        for (const auto& e : b.certificate->entries) coll.push_back({e.sender, e.txs});
        auto v = check_fair_fusion(validity_, s, coll, b.txs);
        if (!v.ok) {
          return violation("fair-fusion",
                           std::vector<std::size_t>(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(i)),
                           "decided block " + std::to_string(i) + " dropped valid " +
                               to_string(v.violating->id()));
        }
      }
      if (!validity_.try_apply_all(s, b.txs)) break;
    }
    // Witness positions reported by correct aggregators.
    for (auto k : rc_inputs_) {
      const auto& e = trace_[k];
      const auto* in = e.as<RcInput>();
      const auto r = e.process.index;
      if (in->instance > states_[r].size() || !states_[r][in->instance - 1]) continue;
      for (const auto& d : in->dropped) {
        auto st = *states_[r][in->instance - 1];
        bool refuted = d.witness <= in->block.txs.size();
        for (std::size_t p = 0; refuted && p < d.witness; ++p) {
          refuted = validity_.try_apply(st, in->block.txs[p]);
        }
        if (refuted && !validity_.admits(st, d.tx)) continue;
        std::vector<std::size_t> witness{k};
        for (const auto& o : outputs_[r]) {
          if (o.instance < in->instance) witness.push_back(o.event);
        }
        return violation("fair-fusion", witness,
                         "r" + std::to_string(r) + " dropped " + to_string(d.tx.id()) +
                             " with a witness position where it is valid");
      }
    }
    return pass("fair-fusion");
  }

  Verdict fusion_validity() const {
    if (!frc_) return {"fusion-validity", VerdictStatus::not_applicable, {}, "no fusion layer"};
    const auto ctx = cert_ctx();
    auto [c, events] = decided_chain();
    auto s = validity_.genesis_state();
    for (std::size_t i = 1; i < c.size(); ++i) {
      auto fault = check_certificate(ctx, s, i, c[i]);
      if (fault != CertificateFault::none) {
        return violation("fusion-validity",
                         std::vector<std::size_t>(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(i)),
                         "decided block " + std::to_string(i) + ": " + std::string(to_string(fault)));
      }
      if (!validity_.try_apply_all(s, c[i].txs)) break;
    }
    return pass("fusion-validity");
  }

  // ------------------------------------------------------------------------
  // User fairness, on chains or on the flattened logs

  /// Validity of `tx` to replica r when its chain has `len` blocks.
  bool valid_to(std::uint32_t r, std::size_t len, const Transaction& tx, bool log_view) const {
    if (!log_view) {
      const auto& s = states_[r].at(len - 1);
      return s && validity_.admits(*s, tx);
    }
    Log l = flatten_chain_to_log(chains_[r].prefix(len));
    l.txs.push_back(tx);
    return valid_log(validity_, l);
  }

  Verdict user_fairness(const std::string& name, bool log_view, std::vector<TxFate>* fates) const {
    const auto rs = correct_replicas();
    if (rs.empty()) return pass(name);
    // Finalised = part of the common prefix of the final correct chains.
    const std::size_t final_lcp = [&] {
      std::size_t len = SIZE_MAX;
      for (auto r : rs) len = std::min(len, chains_[r].size());
      std::size_t i = 0;
      while (i < len && std::all_of(rs.begin(), rs.end(), [&](auto r) {
               return chains_[r].hash_at(i) == chains_[rs.front()].hash_at(i);
             })) {
        ++i;
      }
      return std::max<std::size_t>(i, 1);
    }();
    const auto& ref = chains_[rs.front()];
    auto finalised_at = [&](const Transaction& tx) -> std::optional<Instance> {
      for (std::size_t i = 1; i < final_lcp; ++i) {
        if (std::find(ref[i].txs.begin(), ref[i].txs.end(), tx) != ref[i].txs.end()) return i;
      }
      return std::nullopt;
    };

    std::map<TxId, std::vector<std::size_t>> receipts;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      if (const auto* d = e.as<ReqDelivered>(); d && e.process.role == Role::replica && correct(e.process)) {
        receipts[d->tx.id()].push_back(k);
      }
    }

    std::optional<Verdict> first_violation;
    bool open = false;
    for (std::size_t k = 1; k < trace_.size(); ++k) {
      const auto& e = trace_[k];
      const auto* req = e.as<RequestIssued>();
      if (req == nullptr || e.process.role != Role::client || !correct(e.process)) continue;
      const auto& tx = req->tx;
      TxFate fate{tx.id(), FateKind::pending, std::nullopt, std::nullopt};

      // Receipt by every correct replica, and decisions before the last one.
      std::size_t last_receipt = 0;
      std::set<std::uint32_t> receivers;
      if (auto it = receipts.find(tx.id()); it != receipts.end()) {
        for (auto idx : it->second) {
          if (trace_[idx].as<ReqDelivered>()->tx != tx) continue;
          receivers.insert(trace_[idx].process.index);
          last_receipt = std::max(last_receipt, idx);
        }
      }
      const bool universal = req->sent && receivers.size() == rs.size();
      if (universal) {
        fate.decided_at_receipt = static_cast<Instance>(
            std::count_if(decided_.begin(), decided_.end(), [&](auto d) { return d < last_receipt; }));
      }

      std::vector<std::uint32_t> valid_at_issue;
      for (auto r : rs) {
        if (valid_to(r, lens_[k][r], tx, log_view)) valid_at_issue.push_back(r);
      }
      if (auto at = finalised_at(tx)) {
        fate.kind = FateKind::finalised;
        fate.instance = at;
      } else if (valid_at_issue.empty()) {
        fate.kind = req->sent ? FateKind::invalidated : FateKind::suppressed;
      } else {
        const bool all_invalidated = std::all_of(valid_at_issue.begin(), valid_at_issue.end(), [&](auto r) {
          for (std::size_t len = lens_[k][r] + 1; len <= chains_[r].size(); ++len) {
            if (!valid_to(r, len, tx, log_view)) return true;
          }
          return false;
        });
        if (all_invalidated) {
          fate.kind = FateKind::invalidated;
        } else if (!req->sent) {
          // The client's guard held it back, so no replica was ever asked.
          fate.kind = FateKind::suppressed;
        } else if (!universal) {
          fate.kind = FateKind::pending;
          open = true;
        } else {
          std::vector<std::size_t> later;
          for (auto d : decided_) {
            if (d > last_receipt) later.push_back(d);
          }
          if (later.size() >= grace_) {
            fate.kind = FateKind::starved;
            if (!first_violation) {
              std::vector<std::size_t> witness = correct_outputs_before(k);
              witness.push_back(k);
              for (auto idx : receipts.at(tx.id())) witness.push_back(idx);
              witness.insert(witness.end(), later.begin(), later.begin() + static_cast<std::ptrdiff_t>(grace_));
              first_violation = violation(name, witness,
                                          to_string(tx.id()) + " still valid and pending " +
                                              std::to_string(later.size()) +
                                              " decisions after every correct replica received it");
            }
          } else {
            open = true;
          }
        }
      }
      if (fates != nullptr) fates->push_back(fate);
    }
    if (first_violation) return *first_violation;
    if (open) return inconclusive(name, "some valid requests are pending within the grace period");
    return pass(name);
  }

  // ------------------------------------------------------------------------
  // Log view

  Verdict log_safety() const {
    const auto rs = correct_replicas();
    for (std::size_t a = 0; a < rs.size(); ++a) {
      for (std::size_t b = a + 1; b < rs.size(); ++b) {
        const auto la = flatten_chain_to_log(chains_[rs[a]]).txs;
        const auto lb = flatten_chain_to_log(chains_[rs[b]]).txs;
        const auto len = std::min(la.size(), lb.size());
        for (std::size_t p = 0; p < len; ++p) {
          if (la[p] == lb[p]) continue;
          std::vector<std::size_t> witness;
          for (auto r : {rs[a], rs[b]}) {
            std::size_t covered = 0;
            for (const auto& o : outputs_[r]) {
              witness.push_back(o.event);
              covered += o.instance > 0 ? o.block->txs.size() : 0;
              if (covered > p) break;
            }
          }
          return violation("log-safety", witness,
                           "r" + std::to_string(rs[a]) + " and r" + std::to_string(rs[b]) +
                               " commit different transactions at log position " + std::to_string(p));
        }
      }
    }
    return pass("log-safety");
  }

  Verdict log_validity() const {
    for (auto r : correct_replicas()) {
      auto s = validity_.genesis_state();
      std::vector<std::size_t> seen;
      for (const auto& o : outputs_[r]) {
        seen.push_back(o.event);
        if (o.instance == 0) continue;
        for (const auto& tx : o.block->txs) {
          if (!validity_.try_apply(s, tx)) {
            return violation("log-validity", seen,
                             "r" + std::to_string(r) + " log becomes invalid at " + to_string(tx.id()));
          }
        }
      }
    }
    return pass("log-validity");
  }

  Verdict log_finality() const {
    for (auto r : correct_replicas()) {
      std::vector<Transaction> log;
      std::vector<std::pair<std::size_t, std::size_t>> block_span;  // per instance: start, event
      std::vector<std::size_t> block_len;
      for (const auto& o : outputs_[r]) {
        if (o.instance == 0) {
          if (block_span.empty()) {
            block_span.push_back({0, o.event});
            block_len.push_back(0);
          }
          continue;
        }
        if (o.instance < block_span.size()) {
          const auto [start, ev] = block_span[o.instance];
          const auto len = block_len[o.instance];
          const std::vector<Transaction> committed(log.begin() + static_cast<std::ptrdiff_t>(start),
                                                   log.begin() + static_cast<std::ptrdiff_t>(start + len));
          if (committed != o.block->txs) {
            return violation("log-finality", {ev, o.event},
                             "r" + std::to_string(r) + " recommitted log positions from " +
                                 std::to_string(start));
          }
          continue;
        }
        if (o.instance != block_span.size()) continue;  // a gap is a chain-validity matter
        block_span.push_back({log.size(), o.event});
        block_len.push_back(o.block->txs.size());
        log.insert(log.end(), o.block->txs.begin(), o.block->txs.end());
      }
    }
    return pass("log-finality");
  }

  const Trace& trace_;
  Scenario scenario_;
  KeyRing keys_;
  ValidityModel validity_;
  FusionModel fusion_;
  std::uint64_t grace_ = 1;
  bool frc_ = true;

  std::vector<std::vector<OutputRef>> outputs_;
  std::vector<Chain> chains_;
  std::vector<bool> broken_;
  std::vector<std::vector<InputRef>> inputs_;
  std::vector<std::vector<std::optional<State>>> states_;
  std::vector<std::vector<std::uint32_t>> lens_;
  std::vector<std::size_t> decided_;
  std::vector<std::size_t> rc_inputs_;
  std::optional<std::size_t> end_;
};

inline CheckReport check_trace(const Trace& trace, CheckOptions options = {}) {
  return TraceChecker(trace, options).run();
}

/// The scenario record plus the witness events of `v`, in trace order.
inline Trace witness_trace(const Trace& trace, const Verdict& v) {
  Trace out;
  out.push_back(trace.front());
  for (auto k : v.witness) {
    if (k > 0 && k < trace.size()) out.push_back(trace[k]);
  }
  return out;
}

}  // namespace fairledger
