#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

namespace hmptcp::sim {

/// Simulated time in seconds.
using Time = double;

/// Pending events ordered by (timestamp, insertion sequence). The sequence
/// tie-break makes every run with the same inputs pop in the same order.
class EventQueue {
public:
    using Action = std::function<void()>;

    struct Entry {
        Time at;
        std::uint64_t sequence;
        Action action;
    };

    std::uint64_t push(Time at, Action action);
    Entry pop();

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    Time next_time() const { return heap_.top().at; }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.sequence > b.sequence;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
};

/// Single-threaded discrete-event engine. The clock only moves forward.
class Simulator {
public:
    using Action = EventQueue::Action;

    Time now() const { return now_; }

    /// Throws std::logic_error when `at` lies in the past.
    void schedule(Time at, Action action);
    void schedule_in(Time delay, Action action) { schedule(now_ + delay, std::move(action)); }

    /// Processes every event with timestamp <= `end`, then parks the clock at `end`.
    void run_until(Time end);
    /// Pops and fires one event. Returns false when the queue is empty.
    bool step();

    std::uint64_t events_processed() const { return processed_; }
    std::size_t pending() const { return queue_.size(); }

private:
    EventQueue queue_;
    Time now_ = 0.0;
    std::uint64_t processed_ = 0;
};

}  // namespace hmptcp::sim
