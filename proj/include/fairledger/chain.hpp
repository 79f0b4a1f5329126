#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <vector>

#include "fairledger/crypto.hpp"

namespace fairledger {

/// A genesis-rooted, hash-linked sequence of blocks. Well-formedness is
/// checked on every append, so a `Chain` value is always well-formed. Blocks
/// are shared between copies, which keeps prefix snapshots cheap.
class Chain {
 public:
  Chain() { links_.push_back({std::make_shared<const Block>(Block::genesis()), genesis_hash()}); }

  static Chain from_blocks(std::span<const Block> blocks) {
    if (blocks.empty()) throw StructuralError("chain has no genesis block");
    if (!blocks.front().is_genesis()) throw StructuralError("first block is not the genesis block");
    Chain c;
    for (std::size_t i = 1; i < blocks.size(); ++i) c.append(blocks[i]);
    return c;
  }

  static const BlockHash& genesis_hash() {
    static const BlockHash h = hash_block(Block::genesis());
    return h;
  }

  void append(Block b) {
    if (!b.parent || *b.parent != tip_hash()) {
      throw StructuralError("block " + std::to_string(size()) + " does not point to its predecessor");
    }
    auto hash = hash_block(b);
    links_.push_back({std::make_shared<const Block>(std::move(b)), hash});
  }

  std::size_t size() const { return links_.size(); }
  const Block& operator[](std::size_t i) const { return *links_.at(i).block; }
  const Block& back() const { return *links_.back().block; }
  BlockHash hash_at(std::size_t i) const { return links_.at(i).hash; }
  BlockHash tip_hash() const { return links_.back().hash; }

  /// The first `length` blocks; `length` is clamped to [1, size()].
  Chain prefix(std::size_t length) const {
    Chain c(*this);
    c.links_.resize(std::clamp<std::size_t>(length, 1, size()));
    return c;
  }

  bool is_prefix_of(const Chain& other) const {
    if (size() > other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (links_[i].hash != other.links_[i].hash) return false;
    }
    return true;
  }

  std::vector<Block> blocks() const {
    std::vector<Block> out;
    out.reserve(size());
    for (const auto& l : links_) out.push_back(*l.block);
    return out;
  }

  friend bool operator==(const Chain& a, const Chain& b) {
    return a.size() == b.size() && a.is_prefix_of(b);
  }

 private:
  struct Link {
    std::shared_ptr<const Block> block;
    BlockHash hash;
  };
  std::vector<Link> links_;
};

/// Builds the block that would extend `chain` with `txs` (unsigned).
inline Block next_block(const Chain& chain, std::vector<Transaction> txs) {
  Block b;
  b.parent = chain.tip_hash();
  b.txs = std::move(txs);
  return b;
}

inline Chain longest_common_prefix(std::span<const Chain* const> chains) {
  if (chains.empty()) return Chain{};
  std::size_t len = chains.front()->size();
  for (const Chain* c : chains) {
    std::size_t i = 0;
    const std::size_t limit = std::min(len, c->size());
    while (i < limit && c->hash_at(i) == chains.front()->hash_at(i)) ++i;
    len = i;
  }
  return chains.front()->prefix(len);
}

struct Log {
  std::vector<Transaction> txs;
  friend bool operator==(const Log&, const Log&) = default;
};

/// Concatenation of the transactions of every block in chain order.
inline Log flatten_chain_to_log(const Chain& c) {
  Log log;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const auto& txs = c[i].txs;
    log.txs.insert(log.txs.end(), txs.begin(), txs.end());
  }
  return log;
}

/// One block per log position, each holding exactly that transaction.
inline Chain log_to_chain(const Log& log) {
  Chain c;
  for (const auto& tx : log.txs) c.append(next_block(c, {tx}));
  return c;
}

}  // namespace fairledger
