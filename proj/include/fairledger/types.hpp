#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fairledger {

using Tick = std::uint64_t;
using Instance = std::uint64_t;

struct ReplicaId {
  std::uint32_t value{};
  friend constexpr auto operator<=>(ReplicaId, ReplicaId) = default;
};

struct ClientId {
  std::uint32_t value{};
  friend constexpr auto operator<=>(ClientId, ClientId) = default;
};

enum class Role : std::uint8_t { replica, client, consensus };

// Identity of anything that can send, receive or sign. Replicas and clients
// live in separate index spaces; the consensus service is a single pseudo
// process that only emits output notifications.
struct ProcessId {
  Role role{Role::replica};
  std::uint32_t index{};

  static constexpr ProcessId of(ReplicaId r) { return {Role::replica, r.value}; }
  static constexpr ProcessId of(ClientId c) { return {Role::client, c.value}; }
  static constexpr ProcessId consensus_service() { return {Role::consensus, 0}; }

  friend constexpr auto operator<=>(const ProcessId&, const ProcessId&) = default;
};

inline std::string to_string(ProcessId p) {
  switch (p.role) {
    case Role::replica:
      return "r" + std::to_string(p.index);
    case Role::client:
      return "c" + std::to_string(p.index);
    case Role::consensus:
      return "rc";
  }
  return "?";
}

inline std::optional<ProcessId> parse_process_id(std::string_view text) {
  if (text == "rc") return ProcessId::consensus_service();
  if (text.size() < 2) return std::nullopt;
  Role role;
  if (text[0] == 'r') {
    role = Role::replica;
  } else if (text[0] == 'c') {
    role = Role::client;
  } else {
    return std::nullopt;
  }
  std::uint64_t v = 0;
  for (char ch : text.substr(1)) {
    if (ch < '0' || ch > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(ch - '0');
    if (v > UINT32_MAX) return std::nullopt;
  }
  return ProcessId{role, static_cast<std::uint32_t>(v)};
}

struct Signature {
  ProcessId signer;
  std::uint64_t digest{};
  friend bool operator==(const Signature&, const Signature&) = default;
};

/// Debit `amount` from account `from` and credit `to`. `nonce` is the
/// debited account's sequence number.
struct Transfer {
  std::string from;
  std::string to;
  std::int64_t amount{};
  std::uint64_t nonce{};
  friend bool operator==(const Transfer&, const Transfer&) = default;
};

/// Opaque payload with no semantics beyond its identity.
struct Note {
  std::string text;
  friend bool operator==(const Note&, const Note&) = default;
};

using Payload = std::variant<Note, Transfer>;

struct TxId {
  ClientId client;
  std::uint64_t seq{};
  friend constexpr auto operator<=>(const TxId&, const TxId&) = default;
};

inline std::string to_string(const TxId& id) {
  return "c" + std::to_string(id.client.value) + "#" + std::to_string(id.seq);
}

struct Transaction {
  ClientId client;
  std::uint64_t seq{};
  Payload payload;
  Signature signature;

  TxId id() const { return {client, seq}; }
  friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct BlockHash {
  std::uint64_t value{};
  friend constexpr auto operator<=>(BlockHash, BlockHash) = default;
};

/// A replica's signed contribution to one consensus instance. Certificates
/// carry these verbatim.
struct SubProposal {
  ReplicaId sender;
  Instance instance{};
  std::vector<Transaction> txs;
  Signature signature;
  friend bool operator==(const SubProposal&, const SubProposal&) = default;
};

struct Certificate {
  Instance instance{};
  std::vector<SubProposal> entries;
  friend bool operator==(const Certificate&, const Certificate&) = default;
};

/// The genesis block is the value-initialised block: no parent, no
/// transactions, no signature, no certificate.
struct Block {
  std::optional<BlockHash> parent;
  std::vector<Transaction> txs;
  std::optional<Signature> proposer_sig;
  std::optional<Certificate> certificate;

  static Block genesis() { return {}; }
  bool is_genesis() const {
    return !parent && txs.empty() && !proposer_sig && !certificate;
  }
  std::optional<ReplicaId> proposer() const {
    if (!proposer_sig || proposer_sig->signer.role != Role::replica) return std::nullopt;
    return ReplicaId{proposer_sig->signer.index};
  }
  friend bool operator==(const Block&, const Block&) = default;
};

struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when code tries to sign on behalf of another process.
struct ForgeryError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Raised when a process sends with a `from` other than itself.
struct SpoofingError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Misuse of a protocol primitive by a correct process.
struct ProtocolError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fairledger
