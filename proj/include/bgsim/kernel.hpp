// Discrete-event kernel: virtual clock plus a (fire_at, seq)-ordered queue.
// Single-threaded; one instance per simulation run.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <unordered_map>
#include <utility>

#include "bgsim/types.hpp"

namespace bgsim {

enum class EventKind {
  service_start,
  service_stop,
  job_due,
  alarm_due,
  notification_grace_expiry,
  sensor_op,
  device_change,
  strategy_step,
};

struct SimEvent {
  SimTime fire_at = 0;
  std::uint64_t seq = 0;  // insertion order, tie-breaker at equal fire_at
  EventKind kind = EventKind::strategy_step;
  EventId id = 0;
  std::function<void()> fn;
};

class Kernel {
 public:
  SimTime now() const { return now_; }

  // Enqueue a handler at virtual time fire_at. Sequence numbers are assigned
  // at insertion and never reused, so equal timestamps dispatch in insertion
  // order.
  EventId schedule(SimTime fire_at, EventKind kind, std::function<void()> fn) {
    if (fire_at < now_) {
      throw SimError(Err::time_regression, "schedule at t=" + std::to_string(fire_at) +
                                               " before now=" + std::to_string(now_));
    }
    const EventId id = next_id_++;
    const Key key{fire_at, next_seq_++};
    queue_.emplace(key, SimEvent{fire_at, key.second, kind, id, std::move(fn)});
    index_.emplace(id, key);
    return id;
  }

  // True iff a pending event was removed. Already-dispatched or unknown ids
  // return false.
  bool cancel(EventId id) {
    auto it = index_.find(id);
    if (it == index_.end()) {
      return false;
    }
    queue_.erase(it->second);
    index_.erase(it);
    return true;
  }

  // Dispatch every event with fire_at <= deadline, in (fire_at, seq) order.
  // Handlers may schedule or cancel further events. The clock advances to each
  // dispatched event's fire_at and never past the deadline.
  std::uint64_t run_until(SimTime deadline) {
    std::uint64_t dispatched = 0;
    while (!queue_.empty()) {
      auto it = queue_.begin();
      if (it->first.first > deadline) {
        break;
      }
      SimEvent ev = std::move(it->second);
      index_.erase(ev.id);
      queue_.erase(it);
      now_ = ev.fire_at;
      ++dispatched;
      if (ev.fn) {
        ev.fn();
      }
      if (post_dispatch_) {
        post_dispatch_();
      }
    }
    return dispatched;
  }

  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  // Invoked after every dispatched handler returns. Used by the harness to
  // apply monitor recommendations outside of trace-listener callbacks.
  void set_post_dispatch(std::function<void()> fn) { post_dispatch_ = std::move(fn); }

 private:
  using Key = std::pair<SimTime, std::uint64_t>;

  std::map<Key, SimEvent> queue_;
  std::unordered_map<EventId, Key> index_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 1;
  EventId next_id_ = 1;
  std::function<void()> post_dispatch_;
};

}  // namespace bgsim
