#pragma once

// Experiment description: topology, timing, validity model, adversary,
// workload and checking horizon. Stored as a JSON document; every parse error
// names the offending field.

#include <fstream>
#include <sstream>

#include "fairledger/adversary.hpp"
#include "fairledger/netsim.hpp"

namespace fairledger {

struct WorkloadItem {
  Tick tick{};
  ClientId client;
  Payload payload;
  /// Transfer nonce resolved at issue time against the client's read().
  bool next_nonce = false;
  friend bool operator==(const WorkloadItem&, const WorkloadItem&) = default;
};

struct ValiditySpec {
  std::string model = "set";
  std::map<std::string, AccountSpec> accounts;
  friend bool operator==(const ValiditySpec&, const ValiditySpec&) = default;
};

struct Scenario {
  std::string name = "scenario";
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint64_t seed = 1;
  Tick gst = 0;
  Tick delta = 5;
  Instance horizon_instances = 10;
  /// Hard stop for the simulation clock.
  Tick max_ticks = 20000;
  std::size_t max_block_size = 8;
  std::optional<Construction> construction;
  ValiditySpec validity;
  AdversarySpec adversary;
  PreGstDelay pre_gst_kind = PreGstDelay::uniform;
  Tick pre_gst_param = 20;
  std::vector<WorkloadItem> workload;
  std::uint64_t grace = 3;

  ValidityModel validity_model() const {
    if (validity.model == "account") return AccountModel(validity.accounts);
    return SetModel{};
  }
  DelayPolicy delay_policy() const { return {pre_gst_kind, pre_gst_param, max_ticks}; }
  SimClock clock() const { return {0, gst, delta}; }
  FrcParams frc_params() const { return {n, f}; }
  bool replica_correct(ReplicaId r) const { return !adversary.corrupt_replicas.contains(r); }
  bool client_correct(ClientId c) const { return !adversary.corrupt_clients.contains(c); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline std::string_view to_string(PreGstDelay k) {
  switch (k) {
    case PreGstDelay::uniform:
      return "uniform";
    case PreGstDelay::fixed:
      return "fixed";
    case PreGstDelay::until_gst:
      return "until-gst";
  }
  return "?";
}

inline std::optional<PreGstDelay> parse_pre_gst_delay(std::string_view s) {
  if (s == "uniform") return PreGstDelay::uniform;
  if (s == "fixed") return PreGstDelay::fixed;
  if (s == "until-gst") return PreGstDelay::until_gst;
  return std::nullopt;
}

inline Json encode(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["n"] = s.n;
  j["f"] = s.f;
  j["seed"] = s.seed;
  j["gst"] = s.gst;
  j["delta"] = s.delta;
  j["horizon_instances"] = s.horizon_instances;
  j["max_ticks"] = s.max_ticks;
  j["max_block_size"] = s.max_block_size;
  if (s.construction) j["construction"] = std::string(to_string(*s.construction));

  Json v;
  v["model"] = s.validity.model;
  if (s.validity.model == "account") {
    Json accounts = Json::object();
    for (const auto& [name, spec] : s.validity.accounts) {
      Json a;
      a["balance"] = spec.balance;
      Json owners = Json::array();
      for (auto c : spec.owners) owners.push_back(c.value);
      a["owners"] = std::move(owners);
      accounts[name] = std::move(a);
    }
    v["accounts"] = std::move(accounts);
  }
  j["validity"] = std::move(v);

  const auto& adv = s.adversary;
  Json a;
  Json cr = Json::array();
  for (auto r : adv.corrupt_replicas) cr.push_back(r.value);
  a["corrupt_replicas"] = std::move(cr);
  Json cc = Json::array();
  for (auto c : adv.corrupt_clients) cc.push_back(c.value);
  a["corrupt_clients"] = std::move(cc);
  Json rs;
  rs["name"] = std::string(to_string(adv.replica_strategy));
  if (adv.replica_strategy == ReplicaBehaviour::censor) {
    Json targets = Json::array();
    for (auto c : adv.censor_targets) targets.push_back(c.value);
    rs["targets"] = std::move(targets);
  }
  a["replica_strategy"] = std::move(rs);
  Json cs;
  cs["name"] = std::string(to_string(adv.client_strategy));
  if (adv.client_strategy == ClientBehaviour::spam_invalidator) cs["sink"] = adv.spam_sink;
  a["client_strategy"] = std::move(cs);
  a["rc_policy"] = std::string(to_string(adv.rc_policy));
  Json d;
  d["policy"] = std::string(to_string(s.pre_gst_kind));
  d["param"] = s.pre_gst_param;
  a["pre_gst_delay"] = std::move(d);
  j["adversary"] = std::move(a);

  Json w = Json::array();
  for (const auto& item : s.workload) {
    Json wj;
    wj["tick"] = item.tick;
    wj["client"] = item.client.value;
    Json p = encode(item.payload);
    if (item.next_nonce) p["nonce"] = "next";
    wj["payload"] = std::move(p);
    w.push_back(std::move(wj));
  }
  j["workload"] = std::move(w);
  j["grace"] = s.grace;
  return j;
}

namespace detail {

class FieldReader {
 public:
  FieldReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), field(key));
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "missing");
    return convert<T>(j_.at(key), field(key));
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Rejects keys nobody asked for, which catches misspelt fields.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

  template <class T>
  static T convert(const Json& v, const std::string& where) {
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where, "has the wrong type (" + v.dump() + ")");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Id>
std::set<Id> read_id_set(const Json* j, const std::string& where) {
  std::set<Id> out;
  if (j == nullptr) return out;
  if (!j->is_array()) throw ConfigError(where, "expected an array of ids");
  for (const auto& v : *j) out.insert(Id{FieldReader::convert<std::uint32_t>(v, where)});
  return out;
}

inline Payload read_payload(const Json& j, const std::string& where, bool& next_nonce) {
  FieldReader r(j, where);
  const auto kind = r.require<std::string>("kind");
  next_nonce = false;
  if (kind == "note") {
    Payload p = Note{r.require<std::string>("text")};
    r.finish();
    return p;
  }
  if (kind != "transfer") throw ConfigError(r.field("kind"), "must be 'note' or 'transfer'");
  Transfer t;
  t.from = r.require<std::string>("from");
  t.to = r.require<std::string>("to");
  t.amount = r.require<std::int64_t>("amount");
  const Json* nonce = r.child("nonce");
  if (nonce == nullptr) throw ConfigError(r.field("nonce"), "missing");
  if (nonce->is_string()) {
    if (nonce->get<std::string>() != "next") {
      throw ConfigError(r.field("nonce"), "must be a number or \"next\"");
    }
    next_nonce = true;
  } else {
    t.nonce = FieldReader::convert<std::uint64_t>(*nonce, r.field("nonce"));
  }
  r.finish();
  return t;
}

}  // namespace detail

/// Structural and model-level checks on an assembled scenario.
inline void validate(const Scenario& s) {
  if (s.n == 0) throw ConfigError("n", "must be at least 1");
  if (3 * static_cast<std::uint64_t>(s.f) >= s.n) {
    throw ConfigError("f", "f < n/3 violated: " + std::to_string(s.f) +
                               " >= " + std::to_string(s.n) +
                               "/3 (fewer than a third of the replicas may be Byzantine)");
  }
  if (s.delta < 1) throw ConfigError("delta", "must be at least 1");
  if (s.horizon_instances < 1) throw ConfigError("horizon_instances", "must be at least 1");
  if (s.max_block_size < 1) throw ConfigError("max_block_size", "must be at least 1");
  if (s.grace < 1) throw ConfigError("grace", "must be at least 1");
  if (s.max_ticks < 1) throw ConfigError("max_ticks", "must be at least 1");
  if (s.gst > s.max_ticks) throw ConfigError("gst", "must not exceed max_ticks");
  if (s.validity.model != "set" && s.validity.model != "account") {
    throw ConfigError("validity.model", "must be 'set' or 'account'");
  }
  if (s.validity.model == "set" && !s.validity.accounts.empty()) {
    throw ConfigError("validity.accounts", "only meaningful for the account model");
  }
  const auto& adv = s.adversary;
  if (adv.corrupt_replicas.size() > s.f) {
    throw ConfigError("adversary.corrupt_replicas",
                      "has " + std::to_string(adv.corrupt_replicas.size()) +
                          " replicas but f = " + std::to_string(s.f));
  }
  for (auto r : adv.corrupt_replicas) {
    if (r.value >= s.n) {
      throw ConfigError("adversary.corrupt_replicas",
                        "r" + std::to_string(r.value) + " is not one of the n replicas");
    }
  }
  if (adv.client_strategy == ClientBehaviour::spam_invalidator) {
    if (adv.corrupt_clients.empty()) {
      throw ConfigError("adversary.client_strategy", "spam_invalidator needs a corrupt client");
    }
    if (s.validity.model == "account" && !s.validity.accounts.contains(adv.spam_sink)) {
      throw ConfigError("adversary.client_strategy.sink",
                        "'" + adv.spam_sink + "' is not an account");
    }
  }
  for (std::size_t k = 0; k < s.workload.size(); ++k) {
    const auto& item = s.workload[k];
    const std::string where = "workload[" + std::to_string(k) + "]";
    if (item.tick > s.max_ticks) {
      throw ConfigError(where + ".tick", "tick " + std::to_string(item.tick) +
                                             " is beyond max_ticks " + std::to_string(s.max_ticks));
    }
    if (item.next_nonce && !std::holds_alternative<Transfer>(item.payload)) {
      throw ConfigError(where + ".payload.nonce", "\"next\" only applies to transfers");
    }
  }
}

inline Scenario parse_scenario(const Json& j) {
  using detail::FieldReader;
  Scenario s;
  FieldReader r(j, "");
  s.name = r.get<std::string>("name", s.name);
  s.n = r.get<std::uint32_t>("n", s.n);
  s.f = r.get<std::uint32_t>("f", s.f);
  s.seed = r.get<std::uint64_t>("seed", s.seed);
  s.gst = r.get<Tick>("gst", s.gst);
  s.delta = r.get<Tick>("delta", s.delta);
  s.horizon_instances = r.get<Instance>("horizon_instances", s.horizon_instances);
  s.max_ticks = r.get<Tick>("max_ticks", s.max_ticks);
  s.max_block_size = r.get<std::size_t>("max_block_size", s.max_block_size);
  if (const Json* c = r.child("construction")) {
    auto parsed = parse_construction(FieldReader::convert<std::string>(*c, "construction"));
    if (!parsed) throw ConfigError("construction", "must be bcrc, bcfrc or dlsmr-over-bcfrc");
    s.construction = parsed;
  }
  if (const Json* v = r.child("validity")) {
    FieldReader vr(*v, "validity");
    s.validity.model = vr.require<std::string>("model");
    if (const Json* accounts = vr.child("accounts")) {
      if (!accounts->is_object()) throw ConfigError("validity.accounts", "expected an object");
      for (auto it = accounts->begin(); it != accounts->end(); ++it) {
        FieldReader ar(it.value(), "validity.accounts." + it.key());
        AccountSpec spec;
        spec.balance = ar.require<std::int64_t>("balance");
        auto owners = detail::read_id_set<ClientId>(ar.child("owners"), ar.field("owners"));
        spec.owners.assign(owners.begin(), owners.end());
        ar.finish();
        s.validity.accounts[it.key()] = std::move(spec);
      }
    }
    vr.finish();
  }
  if (const Json* a = r.child("adversary")) {
    FieldReader ar(*a, "adversary");
    auto& adv = s.adversary;
    adv.corrupt_replicas =
        detail::read_id_set<ReplicaId>(ar.child("corrupt_replicas"), "adversary.corrupt_replicas");
    adv.corrupt_clients =
        detail::read_id_set<ClientId>(ar.child("corrupt_clients"), "adversary.corrupt_clients");
    if (const Json* rs = ar.child("replica_strategy")) {
      FieldReader sr(*rs, "adversary.replica_strategy");
      auto b = parse_replica_behaviour(sr.require<std::string>("name"));
      if (!b) {
        throw ConfigError(sr.field("name"), "must be honest, censor, equivocate or silent");
      }
      adv.replica_strategy = *b;
      adv.censor_targets = detail::read_id_set<ClientId>(sr.child("targets"), sr.field("targets"));
      sr.finish();
    }
    if (const Json* cs = ar.child("client_strategy")) {
      FieldReader sr(*cs, "adversary.client_strategy");
      auto b = parse_client_behaviour(sr.require<std::string>("name"));
      if (!b) throw ConfigError(sr.field("name"), "must be none or spam_invalidator");
      adv.client_strategy = *b;
      adv.spam_sink = sr.get<std::string>("sink", "");
      sr.finish();
    }
    if (const Json* p = ar.child("rc_policy")) {
      auto k = parse_selection_kind(FieldReader::convert<std::string>(*p, "adversary.rc_policy"));
      if (!k) {
        throw ConfigError("adversary.rc_policy",
                          "must be round-robin, byzantine-favouring or uniform-random");
      }
      adv.rc_policy = *k;
    }
    if (const Json* d = ar.child("pre_gst_delay")) {
      FieldReader dr(*d, "adversary.pre_gst_delay");
      auto k = parse_pre_gst_delay(dr.get<std::string>("policy", "uniform"));
      if (!k) throw ConfigError(dr.field("policy"), "must be uniform, fixed or until-gst");
      s.pre_gst_kind = *k;
      s.pre_gst_param = dr.get<Tick>("param", s.pre_gst_param);
      dr.finish();
    }
    ar.finish();
  }
  if (const Json* w = r.child("workload")) {
    if (!w->is_array()) throw ConfigError("workload", "expected an array");
    for (std::size_t k = 0; k < w->size(); ++k) {
      FieldReader wr(w->at(k), "workload[" + std::to_string(k) + "]");
      WorkloadItem item;
      item.tick = wr.require<Tick>("tick");
      item.client = ClientId{wr.require<std::uint32_t>("client")};
      const Json* p = wr.child("payload");
      if (p == nullptr) throw ConfigError(wr.field("payload"), "missing");
      item.payload = detail::read_payload(*p, wr.field("payload"), item.next_nonce);
      wr.finish();
      s.workload.push_back(std::move(item));
    }
  }
  s.grace = r.get<std::uint64_t>("grace", s.grace);
  r.finish();
  validate(s);
  return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("<document>", ex.what());
  }
  return parse_scenario(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

}  // namespace fairledger
