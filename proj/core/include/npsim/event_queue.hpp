#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "npsim/errors.hpp"
#include "npsim/model.hpp"

namespace npsim {

/// Pending events ordered by (time, insertion sequence). Popping advances
/// the clock; scheduling before the clock is a simulator bug and throws.
template <typename Payload>
class EventQueue {
 public:
  struct Entry {
    SimTime at;
    std::uint64_t seq = 0;
    Payload payload;
  };

  void schedule(SimTime at, Payload payload) {
    if (at < now_) {
      throw SimulationError("event scheduled at " + std::to_string(at.ns) +
                            "ns, before current time " + std::to_string(now_.ns) + "ns");
    }
    heap_.push(Entry{at, next_seq_++, std::move(payload)});
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime next_time() const { return heap_.top().at; }
  SimTime now() const { return now_; }

  Entry pop() {
    Entry e = heap_.top();
    heap_.pop();
    now_ = e.at;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  SimTime now_;
};

}  // namespace npsim
