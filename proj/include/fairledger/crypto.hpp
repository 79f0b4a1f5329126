#pragma once

// Simulated signatures and content hashing.
//
// A signature is the signer's id plus a digest keyed by a per-process secret
// that only the key ring knows. Forgery is ruled out structurally: the only
// way to obtain a digest is `KeyRing::sign`, which refuses to sign for any
// process other than the caller.

#include <string_view>

#include "fairledger/codec.hpp"

namespace fairledger {

class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char ch : bytes) {
      state_ ^= ch;
      state_ *= kPrime;
    }
  }
  void update(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xffu;
      state_ *= kPrime;
    }
  }
  std::uint64_t digest() const { return state_; }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t kPrime = 0x100000001b3ull;
  std::uint64_t state_ = kOffset;
};

// splitmix64 finaliser
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class KeyRing {
 public:
  explicit KeyRing(std::uint64_t seed) : seed_(seed) {}

  /// Signs `payload` as `signer`. `caller` is the process whose code is
  /// running; anything else is a forgery attempt.
  Signature sign(ProcessId signer, std::string_view payload, ProcessId caller) const {
    if (signer != caller) {
      throw ForgeryError(to_string(caller) + " attempted to sign as " + to_string(signer));
    }
    return {signer, digest(signer, payload)};
  }

  bool verify(const Signature& sig, std::string_view payload, ProcessId claimed) const {
    return sig.signer == claimed && sig.digest == digest(claimed, payload);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t secret(ProcessId p) const {
    return mix64(seed_ ^ mix64((static_cast<std::uint64_t>(p.role) << 32) | p.index));
  }
  std::uint64_t digest(ProcessId p, std::string_view payload) const {
    Fnv1a h;
    h.update(secret(p));
    h.update(payload);
    return mix64(h.digest());
  }

  std::uint64_t seed_;
};

inline std::string signing_payload(const Transaction& tx) { return canonical(encode_unsigned(tx)); }
inline std::string signing_payload(const Block& b) { return canonical(encode_unsigned(b)); }
inline std::string signing_payload(const SubProposal& sp) { return canonical(encode_unsigned(sp)); }

inline BlockHash hash_block(const Block& b) {
  Fnv1a h;
  h.update(canonical(encode(b)));
  return {mix64(h.digest())};
}

inline Transaction make_transaction(const KeyRing& keys, ClientId client, std::uint64_t seq,
                                    Payload payload) {
  Transaction tx{client, seq, std::move(payload), {}};
  tx.signature = keys.sign(ProcessId::of(client), signing_payload(tx), ProcessId::of(client));
  return tx;
}

inline bool verify_transaction(const KeyRing& keys, const Transaction& tx) {
  return keys.verify(tx.signature, signing_payload(tx), ProcessId::of(tx.client));
}

inline SubProposal make_sub_proposal(const KeyRing& keys, ReplicaId sender, Instance instance,
                                     std::vector<Transaction> txs) {
  SubProposal sp{sender, instance, std::move(txs), {}};
  sp.signature = keys.sign(ProcessId::of(sender), signing_payload(sp), ProcessId::of(sender));
  return sp;
}

inline bool verify_sub_proposal(const KeyRing& keys, const SubProposal& sp) {
  return keys.verify(sp.signature, signing_payload(sp), ProcessId::of(sp.sender));
}

inline void sign_block(const KeyRing& keys, Block& b, ReplicaId proposer) {
  b.proposer_sig =
      keys.sign(ProcessId::of(proposer), signing_payload(b), ProcessId::of(proposer));
}

/// True iff the block carries a proposer signature that verifies for the
/// replica it names.
inline bool verify_block_signature(const KeyRing& keys, const Block& b) {
  if (!b.proposer_sig || b.proposer_sig->signer.role != Role::replica) return false;
  return keys.verify(*b.proposer_sig, signing_payload(b), b.proposer_sig->signer);
}

}  // namespace fairledger
