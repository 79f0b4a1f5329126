#pragma once

// Trace events: the complete record of a run and the checker's only input.
// Serialised one event per line as a canonical JSON object:
//   {"tick":..., "kind":"...", "process":"...", <kind-specific fields>}

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fairledger/validity.hpp"

namespace fairledger {

/// First record of every trace: the scenario that produced it.
struct ScenarioRecord {
  Json scenario;
};

struct RequestIssued {
  Transaction tx;
  bool sent{};
  std::vector<std::uint64_t> envelopes;
};

struct ReadSnapshot {
  std::uint64_t length{};
  BlockHash tip;
};

struct ReqDelivered {
  Transaction tx;
  ProcessId from;
  std::uint64_t envelope{};
  Tick sent_at{};
};

struct SubPropSent {
  ReplicaId to;
  SubProposal sub_proposal;
  std::uint64_t envelope{};
};

struct SubPropDelivered {
  SubProposal sub_proposal;
  std::uint64_t envelope{};
  Tick sent_at{};
};

struct RcInput {
  Instance instance{};
  Block block;
  std::vector<DroppedTx> dropped;
};

struct RcDecided {
  Instance instance{};
  Block block;
};

struct Output {
  Instance instance{};
  Block block;
  /// Envelope of the notification, 0 when delivered synchronously.
  std::uint64_t envelope{};
  Tick sent_at{};
};

struct PoolCleared {
  Instance instance{};
  std::vector<TxId> cleared;
};

/// Last record of every trace produced by the simulator.
struct EndOfRun {
  bool horizon_reached{};
  std::uint64_t undelivered{};
  Instance decided{};
};

using EventBody = std::variant<ScenarioRecord, RequestIssued, ReadSnapshot, ReqDelivered,
                               SubPropSent, SubPropDelivered, RcInput, RcDecided, Output,
                               PoolCleared, EndOfRun>;

inline constexpr const char* kEventKinds[] = {
    "scenario",     "request-issued",     "read-snapshot", "req-delivered",
    "sub-prop-sent", "sub-prop-delivered", "rc-input",      "rc-decided",
    "output",       "pool-cleared",       "end"};

struct TraceEvent {
  Tick tick{};
  ProcessId process;
  EventBody body;

  std::string_view kind() const { return kEventKinds[body.index()]; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&body);
  }
};

using Trace = std::vector<TraceEvent>;

namespace detail {

inline Json encode_body(const ScenarioRecord& e) {
  Json j;
  j["scenario"] = e.scenario;
  return j;
}
inline Json encode_body(const RequestIssued& e) {
  Json j;
  j["tx"] = encode(e.tx);
  j["sent"] = e.sent;
  j["envelopes"] = e.envelopes;
  return j;
}
inline Json encode_body(const ReadSnapshot& e) {
  Json j;
  j["length"] = e.length;
  j["tip"] = to_hex(e.tip.value);
  return j;
}
inline Json encode_body(const ReqDelivered& e) {
  Json j;
  j["tx"] = encode(e.tx);
  j["from"] = encode(e.from);
  j["envelope"] = e.envelope;
  j["sent_at"] = e.sent_at;
  return j;
}
inline Json encode_body(const SubPropSent& e) {
  Json j;
  j["to"] = e.to.value;
  j["sub_prop"] = encode(e.sub_proposal);
  j["envelope"] = e.envelope;
  return j;
}
inline Json encode_body(const SubPropDelivered& e) {
  Json j;
  j["sub_prop"] = encode(e.sub_proposal);
  j["envelope"] = e.envelope;
  j["sent_at"] = e.sent_at;
  return j;
}
inline Json encode_body(const RcInput& e) {
  Json j;
  j["instance"] = e.instance;
  j["block"] = encode(e.block);
  Json dropped = Json::array();
  for (const auto& d : e.dropped) {
    Json dj;
    dj["tx"] = encode(d.tx);
    dj["witness"] = d.witness;
    dropped.push_back(std::move(dj));
  }
  j["dropped"] = std::move(dropped);
  return j;
}
inline Json encode_body(const RcDecided& e) {
  Json j;
  j["instance"] = e.instance;
  j["block"] = encode(e.block);
  return j;
}
inline Json encode_body(const Output& e) {
  Json j;
  j["instance"] = e.instance;
  j["block"] = encode(e.block);
  j["envelope"] = e.envelope;
  j["sent_at"] = e.sent_at;
  return j;
}
inline Json encode_body(const PoolCleared& e) {
  Json j;
  j["instance"] = e.instance;
  Json ids = Json::array();
  for (const auto& id : e.cleared) ids.push_back(encode(id));
  j["cleared"] = std::move(ids);
  return j;
}
inline Json encode_body(const EndOfRun& e) {
  Json j;
  j["horizon_reached"] = e.horizon_reached;
  j["undelivered"] = e.undelivered;
  j["decided"] = e.decided;
  return j;
}

inline EventBody decode_body(std::string_view kind, const Json& j) {
  if (kind == "scenario") return ScenarioRecord{j.at("scenario")};
  if (kind == "request-issued") {
    return RequestIssued{decode<Transaction>(j.at("tx")), j.at("sent").get<bool>(),
                         j.at("envelopes").get<std::vector<std::uint64_t>>()};
  }
  if (kind == "read-snapshot") {
    return ReadSnapshot{j.at("length").get<std::uint64_t>(),
                        BlockHash{from_hex(j.at("tip").get<std::string>())}};
  }
  if (kind == "req-delivered") {
    return ReqDelivered{decode<Transaction>(j.at("tx")), decode<ProcessId>(j.at("from")),
                        j.at("envelope").get<std::uint64_t>(), j.at("sent_at").get<Tick>()};
  }
  if (kind == "sub-prop-sent") {
    return SubPropSent{ReplicaId{j.at("to").get<std::uint32_t>()},
                       decode<SubProposal>(j.at("sub_prop")), j.at("envelope").get<std::uint64_t>()};
  }
  if (kind == "sub-prop-delivered") {
    return SubPropDelivered{decode<SubProposal>(j.at("sub_prop")),
                            j.at("envelope").get<std::uint64_t>(), j.at("sent_at").get<Tick>()};
  }
  if (kind == "rc-input") {
    RcInput e{j.at("instance").get<Instance>(), decode<Block>(j.at("block")), {}};
    for (const auto& d : j.at("dropped")) {
      e.dropped.push_back({decode<Transaction>(d.at("tx")), d.at("witness").get<std::size_t>()});
    }
    return e;
  }
  if (kind == "rc-decided") {
    return RcDecided{j.at("instance").get<Instance>(), decode<Block>(j.at("block"))};
  }
  if (kind == "output") {
    return Output{j.at("instance").get<Instance>(), decode<Block>(j.at("block")),
                  j.at("envelope").get<std::uint64_t>(), j.at("sent_at").get<Tick>()};
  }
  if (kind == "pool-cleared") {
    PoolCleared e{j.at("instance").get<Instance>(), {}};
    for (const auto& id : j.at("cleared")) e.cleared.push_back(decode<TxId>(id));
    return e;
  }
  if (kind == "end") {
    return EndOfRun{j.at("horizon_reached").get<bool>(), j.at("undelivered").get<std::uint64_t>(),
                    j.at("decided").get<Instance>()};
  }
  throw TraceError("unknown event kind '" + std::string(kind) + "'");
}

}  // namespace detail

inline Json encode(const TraceEvent& e) {
  Json j;
  j["tick"] = e.tick;
  j["kind"] = std::string(e.kind());
  j["process"] = encode(e.process);
  Json body = std::visit([](const auto& b) { return detail::encode_body(b); }, e.body);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j;
}

template <>
inline TraceEvent decode<TraceEvent>(const Json& j) {
  try {
    return {j.at("tick").get<Tick>(), decode<ProcessId>(j.at("process")),
            detail::decode_body(j.at("kind").get<std::string>(), j)};
  } catch (const nlohmann::json::exception& ex) {
    throw TraceError(std::string("malformed trace event: ") + ex.what());
  }
}

inline void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& e : trace) out << canonical(encode(e)) << '\n';
}

inline std::string trace_to_string(const Trace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  return out.str();
}

inline Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw TraceError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    trace.push_back(decode<TraceEvent>(j));
  }
  return trace;
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file " + path);
  return read_trace(in);
}

}  // namespace fairledger
