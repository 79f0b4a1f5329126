#pragma once

// Direct evaluation of every property on a trace, kept deliberately naive:
// chains are the raw sequences of output blocks, validity is always a fold of
// the whole log from genesis, fusion is the brute-force reference. Used to
// cross-examine the checker, never by it.

#include <map>
#include <set>
#include <string>

#include "fairledger/checker.hpp"
#include "oracle/fusion_oracle.hpp"

namespace oracle {

using Statuses = std::map<std::string, VerdictStatus>;

class DirectEvaluator {
 public:
  DirectEvaluator(const Trace& t, std::uint64_t grace)
      : t_(t),
        s_(parse_scenario(t.front().as<ScenarioRecord>()->scenario)),
        keys_(s_.seed),
        m_(s_.validity_model()),
        grace_(grace),
        frc_(uses_frc(*s_.construction)) {
    for (std::uint32_t r = 0; r < s_.n; ++r) {
      if (s_.replica_correct(ReplicaId{r})) rs_.push_back(r);
    }
  }

  Statuses evaluate() const {
    Statuses out;
    out["agreement"] = agreement();
    out["chain-finality"] = chain_finality();
    out["chain-validity"] = chain_validity();
    out["termination"] = termination();
    out["valid-request"] = valid_request();
    out["valid-input"] = valid_input();
    out["request-agreement"] = request_agreement();
    out["stubborn-input"] = stubborn_input();
    out["fair-fusion"] = frc_ ? fair_fusion() : VerdictStatus::not_applicable;
    out["fusion-validity"] = frc_ ? fusion_validity() : VerdictStatus::not_applicable;
    out["user-fairness"] = user_fairness();
    out["log-user-fairness"] = out["user-fairness"];
    out["log-safety"] = log_safety();
    out["log-validity"] = log_validity();
    out["log-finality"] = log_finality();
    return out;
  }

 private:
  using V = VerdictStatus;
  using Blocks = std::vector<Block>;

  bool is_correct_replica(const TraceEvent& e) const {
    return e.process.role == Role::replica && e.process.index < s_.n &&
           s_.replica_correct(ReplicaId{e.process.index});
  }
  bool is_correct_client(const TraceEvent& e) const {
    return e.process.role == Role::client && s_.client_correct(ClientId{e.process.index});
  }

  /// Output blocks of r (instance ≥ 1) among the first `upto` events,
  /// preceded by genesis.
  Blocks chain_of(std::uint32_t r, std::size_t upto) const {
    Blocks b{Block::genesis()};
    for (std::size_t k = 1; k < upto && k < t_.size(); ++k) {
      const auto* o = t_[k].as<Output>();
      if (o && is_correct_replica(t_[k]) && t_[k].process.index == r && o->instance > 0) {
        b.push_back(o->block);
      }
    }
    return b;
  }

  static std::vector<Transaction> log_of(const Blocks& b, std::size_t len) {
    std::vector<Transaction> l;
    for (std::size_t i = 1; i < len && i < b.size(); ++i) l.insert(l.end(), b[i].txs.begin(), b[i].txs.end());
    return l;
  }

  static bool prefix_related(const Blocks& a, const Blocks& b) {
    const auto n = std::min(a.size(), b.size());
    return std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), b.begin());
  }

  std::size_t lcp(const std::vector<Blocks>& chains) const {
    std::size_t len = 0;
    while (true) {
      bool ok = true;
      for (const auto& c : chains) ok = ok && c.size() > len && c[len] == chains.front()[len];
      if (!ok) break;
      ++len;
    }
    return std::max<std::size_t>(len, 1);
  }

  bool certified(const Blocks& prefix, Instance i, const Block& b) const {
    if (!b.certificate || b.certificate->instance != i) return false;
    std::set<std::uint32_t> senders;
    std::vector<std::pair<std::uint32_t, std::vector<Transaction>>> coll;
    for (const auto& e : b.certificate->entries) {
      if (e.sender.value >= s_.n || e.instance != i) return false;
      if (!senders.insert(e.sender.value).second) return false;
      if (!verify_sub_proposal(keys_, e)) return false;
      coll.push_back({e.sender.value, e.txs});
    }
    if (senders.size() < s_.f + 1) return false;
    return fuse(m_, log_of(prefix, prefix.size()), coll) == b.txs;
  }

  // ------------------------------------------------------------------------

  V agreement() const {
    std::map<std::uint32_t, Blocks> chains;
    for (auto r : rs_) chains[r] = {Block::genesis()};
    for (std::size_t k = 1; k < t_.size(); ++k) {
      const auto* o = t_[k].as<Output>();
      if (!o || !is_correct_replica(t_[k]) || o->instance == 0) continue;
      chains[t_[k].process.index].push_back(o->block);
      for (auto a : rs_) {
        for (auto b : rs_) {
          if (!prefix_related(chains[a], chains[b])) return V::violation;
        }
      }
    }
    return V::pass;
  }

  V chain_finality() const {
    std::map<Instance, std::vector<Block>> decided;
    std::map<std::pair<std::uint32_t, Instance>, std::vector<Block>> outs;
    auto add = [](std::vector<Block>& v, const Block& b) {
      if (std::find(v.begin(), v.end(), b) == v.end()) v.push_back(b);
      return v.size() <= 1;
    };
    for (std::size_t k = 1; k < t_.size(); ++k) {
      if (const auto* d = t_[k].as<RcDecided>()) {
        if (!add(decided[d->instance], d->block)) return V::violation;
      }
      if (const auto* o = t_[k].as<Output>(); o && is_correct_replica(t_[k])) {
        if (!add(outs[{t_[k].process.index, o->instance}], o->block)) return V::violation;
      }
    }
    return V::pass;
  }

  V chain_validity() const {
    for (auto r : rs_) {
      Blocks prev;
      for (std::size_t k = 1; k < t_.size(); ++k) {
        const auto* o = t_[k].as<Output>();
        if (!o || !is_correct_replica(t_[k]) || t_[k].process.index != r) continue;
        if (o->instance != prev.size()) return V::violation;
        const auto& b = o->block;
        if (o->instance == 0) {
          if (b != Block::genesis()) return V::violation;
          prev.push_back(b);
          continue;
        }
        if (b.parent != hash_block(prev.back())) return V::violation;
        if (!b.proposer_sig || b.proposer_sig->signer.role != Role::replica ||
            b.proposer_sig->signer.index >= s_.n ||
            !keys_.verify(*b.proposer_sig, signing_payload(b), b.proposer_sig->signer)) {
          return V::violation;
        }
        if (!valid_after(m_, log_of(prev, prev.size()), b.txs, nullptr)) return V::violation;
        if (frc_ && !certified(prev, o->instance, b)) return V::violation;
        prev.push_back(b);
      }
    }
    return V::pass;
  }

  V termination() const {
    for (const auto& e : t_) {
      if (const auto* end = e.as<EndOfRun>()) return end->horizon_reached ? V::pass : V::inconclusive;
    }
    return V::inconclusive;
  }

  V valid_request() const {
    for (std::size_t k = 1; k < t_.size(); ++k) {
      const auto* req = t_[k].as<RequestIssued>();
      if (!req || !is_correct_client(t_[k]) || !req->sent) continue;
      // The read belonging to this request: the client's latest read not
      // already followed by another of its requests.
      std::optional<std::size_t> snap;
      for (std::size_t j = k; j-- > 1;) {
        if (t_[j].process != t_[k].process) continue;
        if (t_[j].as<RequestIssued>()) break;
        if (t_[j].as<ReadSnapshot>()) {
          snap = j;
          break;
        }
      }
      if (!snap) return V::violation;
      std::vector<Blocks> chains;
      for (auto r : rs_) chains.push_back(chain_of(r, *snap));
      const auto len = lcp(chains);
      const auto* rs = t_[*snap].as<ReadSnapshot>();
      if (rs->length != len || rs->tip != hash_block(chains.front()[len - 1])) return V::violation;
      if (!valid_after(m_, log_of(chains.front(), len), {}, &req->tx)) return V::violation;
    }
    return V::pass;
  }

  bool delivered_before(std::uint32_t r, std::size_t k, const Transaction& tx) const {
    for (std::size_t j = 1; j < k; ++j) {
      const auto* d = t_[j].as<ReqDelivered>();
      if (d && t_[j].process == ProcessId::of(ReplicaId{r}) && d->tx == tx) return true;
    }
    return false;
  }

  V valid_input() const {
    for (std::size_t k = 1; k < t_.size(); ++k) {
      if (!is_correct_replica(t_[k])) continue;
      const auto r = t_[k].process.index;
      if (const auto* sp = t_[k].as<SubPropSent>(); sp && frc_) {
        for (const auto& tx : sp->sub_proposal.txs) {
          if (!delivered_before(r, k, tx)) return V::violation;
        }
      }
      if (const auto* in = t_[k].as<RcInput>()) {
        if (!frc_) {
          for (const auto& tx : in->block.txs) {
            if (!delivered_before(r, k, tx)) return V::violation;
          }
        } else if (in->block.certificate) {
          for (const auto& entry : in->block.certificate->entries) {
            bool got = false;
            for (std::size_t j = 1; j < k && !got; ++j) {
              const auto* d = t_[j].as<SubPropDelivered>();
              got = d && t_[j].process == t_[k].process && d->sub_proposal == entry;
            }
            if (!got) return V::violation;
          }
        }
      }
    }
    return V::pass;
  }

  V request_agreement() const {
    bool drained = false;
    for (const auto& e : t_) {
      if (const auto* end = e.as<EndOfRun>()) drained = end->undelivered == 0;
    }
    bool missing = false;
    for (std::size_t k = 1; k < t_.size(); ++k) {
      const auto* req = t_[k].as<RequestIssued>();
      if (!req || !req->sent || !is_correct_client(t_[k])) continue;
      for (auto r : rs_) {
        bool got = false;
        for (std::size_t j = 1; j < t_.size() && !got; ++j) {
          const auto* d = t_[j].as<ReqDelivered>();
          got = d && t_[j].process == ProcessId::of(ReplicaId{r}) && d->tx.id() == req->tx.id();
        }
        if (!got) {
          if (drained) return V::violation;
          missing = true;
        }
      }
    }
    return missing ? V::inconclusive : V::pass;
  }

  struct Input {
    Instance instance;
    std::vector<Transaction> txs;
    std::size_t event;
  };

  std::vector<Input> inputs_of(std::uint32_t r) const {
    std::vector<Input> out;
    for (std::size_t k = 1; k < t_.size(); ++k) {
      if (!is_correct_replica(t_[k]) || t_[k].process.index != r) continue;
      if (const auto* in = t_[k].as<RcInput>(); in && !frc_) out.push_back({in->instance, in->block.txs, k});
      if (const auto* sp = t_[k].as<SubPropSent>(); sp && frc_) {
        const auto i = sp->sub_proposal.instance;
        if (std::none_of(out.begin(), out.end(), [&](const Input& x) { return x.instance == i; })) {
          out.push_back({i, sp->sub_proposal.txs, k});
        }
      }
    }
    return out;
  }

  V stubborn_input() const {
    bool open = false;
    for (std::size_t k = 1; k < t_.size(); ++k) {
      const auto* d = t_[k].as<ReqDelivered>();
      if (!d || !is_correct_replica(t_[k])) continue;
      const auto r = t_[k].process.index;
      const auto final_chain = chain_of(r, t_.size());
      bool finalised = false;
      for (std::size_t i = 1; i < final_chain.size(); ++i) {
        const auto& txs = final_chain[i].txs;
        finalised = finalised || std::find(txs.begin(), txs.end(), d->tx) != txs.end();
      }
      if (finalised) continue;
      Instance i = 0;
      for (std::size_t j = 1; j < k; ++j) {
        if (t_[j].as<Output>() && t_[j].process == t_[k].process) ++i;
      }
      std::optional<Input> last;
      bool justified = false;
      for (const auto& in : inputs_of(r)) {
        if (in.event < k || in.instance < i || in.instance > final_chain.size()) continue;
        const auto prefix = log_of(final_chain, in.instance);
        for (std::size_t p = 0; p <= in.txs.size() && !justified; ++p) {
          std::vector<Transaction> head(in.txs.begin(), in.txs.begin() + static_cast<std::ptrdiff_t>(p));
          if (std::find(head.begin(), head.end(), d->tx) != head.end()) break;
          justified = !valid_after(m_, prefix, head, &d->tx);
        }
        if (justified) break;
        if (!last || in.instance > last->instance) last = in;
      }
      if (justified) continue;
      if (!last) {
        open = true;
        continue;
      }
      if (std::find(last->txs.begin(), last->txs.end(), d->tx) != last->txs.end()) continue;
      if (last->txs.size() >= s_.max_block_size) {
        open = true;
        continue;
      }
      return V::violation;
    }
    return open ? V::inconclusive : V::pass;
  }

  Blocks decided_chain() const {
    Blocks c{Block::genesis()};
    for (const auto& e : t_) {
      const auto* d = e.as<RcDecided>();
      if (d && d->instance == c.size() && d->block.parent == hash_block(c.back())) c.push_back(d->block);
    }
    return c;
  }

  V fair_fusion() const {
    const auto c = decided_chain();
    for (std::size_t i = 1; i < c.size(); ++i) {
      const auto prefix = log_of(c, i);
      if (c[i].certificate) {
        std::vector<std::vector<Transaction>> coll;
        for (const auto& e : c[i].certificate->entries) coll.push_back(e.txs);
        if (!fair(m_, prefix, coll, c[i].txs)) return V::violation;
      }
      if (!valid_after(m_, prefix, c[i].txs, nullptr)) break;
    }
    for (std::size_t k = 1; k < t_.size(); ++k) {
      const auto* in = t_[k].as<RcInput>();
      if (!in || !is_correct_replica(t_[k])) continue;
      const auto chain = chain_of(t_[k].process.index, t_.size());
      if (in->instance > chain.size()) continue;
      const auto prefix = log_of(chain, in->instance);
      if (!valid_after(m_, prefix, {}, nullptr)) continue;
      for (const auto& d : in->dropped) {
        if (d.witness > in->block.txs.size()) return V::violation;
        std::vector<Transaction> head(in->block.txs.begin(),
                                      in->block.txs.begin() + static_cast<std::ptrdiff_t>(d.witness));
        if (!valid_after(m_, prefix, head, nullptr) || valid_after(m_, prefix, head, &d.tx)) {
          return V::violation;
        }
      }
    }
    return V::pass;
  }

  V fusion_validity() const {
    const auto c = decided_chain();
    for (std::size_t i = 1; i < c.size(); ++i) {
      const Blocks prefix(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(i));
      if (!certified(prefix, i, c[i])) return V::violation;
      if (!valid_after(m_, log_of(c, i), c[i].txs, nullptr)) break;
    }
    return V::pass;
  }

  V user_fairness() const {
    std::vector<Blocks> finals;
    for (auto r : rs_) finals.push_back(chain_of(r, t_.size()));
    const auto fin = lcp(finals);
    bool open = false;
    for (std::size_t k = 1; k < t_.size(); ++k) {
      const auto* req = t_[k].as<RequestIssued>();
      if (!req || !is_correct_client(t_[k])) continue;
      const auto& tx = req->tx;
      bool finalised = false;
      for (std::size_t i = 1; i < fin; ++i) {
        finalised = finalised || std::find(finals[0][i].txs.begin(), finals[0][i].txs.end(), tx) !=
                                     finals[0][i].txs.end();
      }
      if (finalised || !req->sent) continue;
      bool some_valid = false;
      bool all_invalidated = true;
      for (auto r : rs_) {
        const auto at_issue = chain_of(r, k);
        if (!valid_after(m_, log_of(at_issue, at_issue.size()), {}, &tx)) continue;
        some_valid = true;
        const auto full = chain_of(r, t_.size());
        bool invalidated = false;
        for (auto len = at_issue.size() + 1; len <= full.size() && !invalidated; ++len) {
          invalidated = !valid_after(m_, log_of(full, len), {}, &tx);
        }
        all_invalidated = all_invalidated && invalidated;
      }
      if (!some_valid || all_invalidated) continue;
      std::set<std::uint32_t> receivers;
      std::size_t last = 0;
      for (std::size_t j = 1; j < t_.size(); ++j) {
        const auto* d = t_[j].as<ReqDelivered>();
        if (d && is_correct_replica(t_[j]) && d->tx == tx) {
          receivers.insert(t_[j].process.index);
          last = j;
        }
      }
      if (receivers.size() != rs_.size()) {
        open = true;
        continue;
      }
      std::uint64_t after = 0;
      for (std::size_t j = last + 1; j < t_.size(); ++j) after += t_[j].as<RcDecided>() ? 1 : 0;
      if (after >= grace_) return V::violation;
      open = true;
    }
    return open ? V::inconclusive : V::pass;
  }

  V log_safety() const {
    for (auto a : rs_) {
      for (auto b : rs_) {
        const auto ca = chain_of(a, t_.size());
        const auto cb = chain_of(b, t_.size());
        const auto la = log_of(ca, ca.size());
        const auto lb = log_of(cb, cb.size());
        const auto n = std::min(la.size(), lb.size());
        if (!std::equal(la.begin(), la.begin() + static_cast<std::ptrdiff_t>(n), lb.begin())) {
          return V::violation;
        }
      }
    }
    return V::pass;
  }

  V log_validity() const {
    for (auto r : rs_) {
      const auto c = chain_of(r, t_.size());
      if (!valid_log(m_, Log{log_of(c, c.size())})) return V::violation;
    }
    return V::pass;
  }

  V log_finality() const {
    for (auto r : rs_) {
      std::vector<std::vector<Transaction>> committed;  // index = instance - 1
      bool genesis = false;
      for (std::size_t k = 1; k < t_.size(); ++k) {
        const auto* o = t_[k].as<Output>();
        if (!o || !is_correct_replica(t_[k]) || t_[k].process.index != r) continue;
        if (o->instance == 0) {
          genesis = true;
          continue;
        }
        if (!genesis) continue;
        if (o->instance <= committed.size()) {
          if (committed[o->instance - 1] != o->block.txs) return V::violation;
        } else if (o->instance == committed.size() + 1) {
          committed.push_back(o->block.txs);
        }
      }
    }
    return V::pass;
  }

  const Trace& t_;
  Scenario s_;
  KeyRing keys_;
  ValidityModel m_;
  std::uint64_t grace_;
  bool frc_;
  std::vector<std::uint32_t> rs_;
};

inline Statuses evaluate_directly(const Trace& t, std::uint64_t grace) {
  return DirectEvaluator(t, grace).evaluate();
}

}  // namespace oracle
