#pragma once

// Discrete-event network: reliable authenticated point-to-point links over
// logical integer ticks. Before GST the delay of each envelope is chosen by a
// pre-GST policy (finite, capped); from GST on it is uniform in [1, delta].
//
// Two delivery modes share one queue interface:
//  * timed: envelopes are ordered by (deliver_at, send sequence);
//  * controlled: a Scheduler picks the next envelope among those in flight,
//    which is how delivery interleavings are enumerated systematically.

#include <algorithm>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "fairledger/types.hpp"

namespace fairledger {

struct SimClock {
  Tick now = 0;
  Tick gst = 0;
  Tick delta = 5;
};

enum class PreGstDelay {
  uniform,    // uniform in [1, param]
  fixed,      // exactly param
  until_gst,  // held until GST, then uniform in [1, delta]
};

struct DelayPolicy {
  PreGstDelay kind = PreGstDelay::uniform;
  Tick param = 20;
  /// Absolute tick after which nothing is scheduled; keeps finite traces
  /// reliable.
  Tick cap = std::numeric_limits<Tick>::max() / 2;
};

/// Delivery tick for an envelope sent at `clock.now`.
template <class Rng>
Tick draw_delivery(const DelayPolicy& policy, const SimClock& clock, Rng& rng) {
  const Tick now = clock.now;
  auto uniform = [&](Tick lo, Tick hi) {
    return std::uniform_int_distribution<Tick>(lo, hi)(rng);
  };
  Tick at;
  if (now >= clock.gst) {
    at = now + uniform(1, clock.delta);
  } else {
    switch (policy.kind) {
      case PreGstDelay::fixed:
        at = now + std::max<Tick>(1, policy.param);
        break;
      case PreGstDelay::until_gst:
        at = clock.gst + uniform(1, clock.delta);
        break;
      case PreGstDelay::uniform:
      default:
        at = now + uniform(1, std::max<Tick>(1, policy.param));
        break;
    }
  }
  return std::max(now + 1, std::min(at, std::max(policy.cap, now + 1)));
}

template <class Message>
struct Envelope {
  std::uint64_t id{};
  ProcessId from;
  ProcessId to;
  Message payload;
  Tick sent_at{};
  Tick deliver_at{};
};

struct Timer {
  ProcessId target;
  std::uint64_t tag{};
  Tick at{};
};

template <class Message>
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  /// Index of the envelope to deliver next, or nullopt to stop.
  virtual std::optional<std::size_t> pick(std::span<const Envelope<Message>> in_flight) = 0;
};

template <class Message>
class Network {
 public:
  using Event = std::variant<Envelope<Message>, Timer>;

  Network(SimClock clock, DelayPolicy policy, std::uint64_t seed)
      : clock_(clock), policy_(policy), rng_(seed) {}

  void set_scheduler(Scheduler<Message>* scheduler) { scheduler_ = scheduler; }
  bool controlled() const { return scheduler_ != nullptr; }

  const SimClock& clock() const { return clock_; }
  Tick now() const { return clock_.now; }

  ProcessId executing() const { return executing_; }
  void set_executing(ProcessId p) { executing_ = p; }

  /// Enqueues one envelope; `from` must be the executing process.
  std::uint64_t send(ProcessId from, ProcessId to, Message payload) {
    if (from != executing_) {
      throw SpoofingError(to_string(executing_) + " attempted to send as " + to_string(from));
    }
    Envelope<Message> e{next_id_++, from, to, std::move(payload), clock_.now, 0};
    if (controlled()) {
      in_flight_.push_back(std::move(e));
    } else {
      const Tick at = draw_delivery(policy_, clock_, rng_);
      e.deliver_at = at;
      push(Event{std::move(e)}, at);
    }
    ++pending_;
    return next_id_ - 1;
  }

  std::vector<std::uint64_t> broadcast(ProcessId from, std::span<const ProcessId> to,
                                       const Message& payload) {
    std::vector<std::uint64_t> ids;
    ids.reserve(to.size());
    for (auto dest : to) ids.push_back(send(from, dest, payload));
    return ids;
  }

  void schedule_timer(ProcessId target, Tick at, std::uint64_t tag) {
    push(Event{Timer{target, tag, at}}, std::max(at, clock_.now));
  }

  /// Pops the next event and advances the clock to its time.
  std::optional<Event> next() {
    if (!controlled()) {
      if (queue_.empty()) return std::nullopt;
      auto item = queue_.top();
      queue_.pop();
      clock_.now = std::max(clock_.now, item.at);
      if (std::holds_alternative<Envelope<Message>>(item.event)) --pending_;
      return std::move(item.event);
    }
    if (!queue_.empty() && queue_.top().at <= clock_.now) return pop_timer();
    if (!in_flight_.empty()) {
      if (auto idx = scheduler_->pick(in_flight_)) {
        auto e = std::move(in_flight_.at(*idx));
        in_flight_.erase(in_flight_.begin() + static_cast<std::ptrdiff_t>(*idx));
        clock_.now += 1;
        e.deliver_at = clock_.now;
        --pending_;
        return Event{std::move(e)};
      }
      return std::nullopt;
    }
    if (!queue_.empty()) return pop_timer();
    return std::nullopt;
  }

  /// Envelopes sent but not yet delivered.
  std::size_t in_flight() const { return pending_; }

 private:
  struct Item {
    Tick at;
    std::uint64_t seq;
    Event event;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  void push(Event e, Tick at) { queue_.push(Item{at, seq_++, std::move(e)}); }

  std::optional<Event> pop_timer() {
    auto item = queue_.top();
    queue_.pop();
    clock_.now = std::max(clock_.now, item.at);
    return std::move(item.event);
  }

  SimClock clock_;
  DelayPolicy policy_;
  std::mt19937_64 rng_;
  Scheduler<Message>* scheduler_ = nullptr;
  ProcessId executing_ = ProcessId::consensus_service();
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  std::vector<Envelope<Message>> in_flight_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_id_ = 1;
  std::size_t pending_ = 0;
};

}  // namespace fairledger
