#pragma once

// Canonical textual encoding of the domain types. Objects are emitted with a
// fixed field order, so `dump()` of an encoded value is a canonical byte
// string suitable for hashing and signing.

#include <cstdio>
#include <string>

#include <json.hpp>

#include "fairledger/types.hpp"

namespace fairledger {

using Json = nlohmann::ordered_json;

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t from_hex(const std::string& s) {
  if (s.empty() || s.size() > 16) throw TraceError("bad hex value '" + s + "'");
  std::uint64_t v = 0;
  for (char ch : s) {
    v <<= 4;
    if (ch >= '0' && ch <= '9') {
      v |= static_cast<std::uint64_t>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      v |= static_cast<std::uint64_t>(ch - 'a' + 10);
    } else {
      throw TraceError("bad hex value '" + s + "'");
    }
  }
  return v;
}

template <class T>
T decode(const Json& j);

inline Json encode(ProcessId p) { return to_string(p); }

template <>
inline ProcessId decode<ProcessId>(const Json& j) {
  auto p = parse_process_id(j.get<std::string>());
  if (!p) throw TraceError("bad process id " + j.dump());
  return *p;
}

inline Json encode(const Signature& s) {
  Json j;
  j["signer"] = encode(s.signer);
  j["digest"] = to_hex(s.digest);
  return j;
}

template <>
inline Signature decode<Signature>(const Json& j) {
  return {decode<ProcessId>(j.at("signer")), from_hex(j.at("digest").get<std::string>())};
}

inline Json encode(const Payload& p) {
  Json j;
  if (const auto* t = std::get_if<Transfer>(&p)) {
    j["kind"] = "transfer";
    j["from"] = t->from;
    j["to"] = t->to;
    j["amount"] = t->amount;
    j["nonce"] = t->nonce;
  } else {
    j["kind"] = "note";
    j["text"] = std::get<Note>(p).text;
  }
  return j;
}

template <>
inline Payload decode<Payload>(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "transfer") {
    return Transfer{j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                    j.at("amount").get<std::int64_t>(), j.at("nonce").get<std::uint64_t>()};
  }
  if (kind == "note") return Note{j.at("text").get<std::string>()};
  throw TraceError("unknown payload kind '" + kind + "'");
}

inline Json encode_unsigned(const Transaction& tx) {
  Json j;
  j["client"] = tx.client.value;
  j["seq"] = tx.seq;
  j["payload"] = encode(tx.payload);
  return j;
}

inline Json encode(const Transaction& tx) {
  Json j = encode_unsigned(tx);
  j["signature"] = encode(tx.signature);
  return j;
}

template <>
inline Transaction decode<Transaction>(const Json& j) {
  return {ClientId{j.at("client").get<std::uint32_t>()}, j.at("seq").get<std::uint64_t>(),
          decode<Payload>(j.at("payload")), decode<Signature>(j.at("signature"))};
}

inline Json encode(const TxId& id) {
  Json j;
  j["client"] = id.client.value;
  j["seq"] = id.seq;
  return j;
}

template <>
inline TxId decode<TxId>(const Json& j) {
  return {ClientId{j.at("client").get<std::uint32_t>()}, j.at("seq").get<std::uint64_t>()};
}

inline Json encode_txs(const std::vector<Transaction>& txs) {
  Json arr = Json::array();
  for (const auto& tx : txs) arr.push_back(encode(tx));
  return arr;
}

inline std::vector<Transaction> decode_txs(const Json& j) {
  std::vector<Transaction> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(decode<Transaction>(e));
  return out;
}

inline Json encode_unsigned(const SubProposal& sp) {
  Json j;
  j["tag"] = "SUB-PROP";
  j["sender"] = sp.sender.value;
  j["instance"] = sp.instance;
  j["txs"] = encode_txs(sp.txs);
  return j;
}

inline Json encode(const SubProposal& sp) {
  Json j = encode_unsigned(sp);
  j["signature"] = encode(sp.signature);
  return j;
}

template <>
inline SubProposal decode<SubProposal>(const Json& j) {
  if (j.at("tag").get<std::string>() != "SUB-PROP") throw TraceError("bad sub-proposal tag");
  return {ReplicaId{j.at("sender").get<std::uint32_t>()}, j.at("instance").get<Instance>(),
          decode_txs(j.at("txs")), decode<Signature>(j.at("signature"))};
}

inline Json encode(const Certificate& c) {
  Json j;
  j["instance"] = c.instance;
  Json entries = Json::array();
  for (const auto& e : c.entries) entries.push_back(encode(e));
  j["entries"] = std::move(entries);
  return j;
}

template <>
inline Certificate decode<Certificate>(const Json& j) {
  Certificate c;
  c.instance = j.at("instance").get<Instance>();
  for (const auto& e : j.at("entries")) c.entries.push_back(decode<SubProposal>(e));
  return c;
}

inline Json encode_unsigned(const Block& b) {
  Json j;
  j["parent"] = b.parent ? Json(to_hex(b.parent->value)) : Json(nullptr);
  j["txs"] = encode_txs(b.txs);
  j["certificate"] = b.certificate ? encode(*b.certificate) : Json(nullptr);
  return j;
}

inline Json encode(const Block& b) {
  Json j;
  j["parent"] = b.parent ? Json(to_hex(b.parent->value)) : Json(nullptr);
  j["txs"] = encode_txs(b.txs);
  j["proposer_sig"] = b.proposer_sig ? encode(*b.proposer_sig) : Json(nullptr);
  j["certificate"] = b.certificate ? encode(*b.certificate) : Json(nullptr);
  return j;
}

template <>
inline Block decode<Block>(const Json& j) {
  Block b;
  if (!j.at("parent").is_null()) b.parent = BlockHash{from_hex(j.at("parent").get<std::string>())};
  b.txs = decode_txs(j.at("txs"));
  if (!j.at("certificate").is_null()) b.certificate = decode<Certificate>(j.at("certificate"));
  if (!j.at("proposer_sig").is_null()) b.proposer_sig = decode<Signature>(j.at("proposer_sig"));
  return b;
}

inline std::string canonical(const Json& j) { return j.dump(); }

}  // namespace fairledger
