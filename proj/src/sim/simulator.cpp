#include "hmptcp/sim/simulator.hpp"

#include <stdexcept>
#include <string>

namespace hmptcp::sim {

std::uint64_t EventQueue::push(Time at, Action action) {
    const std::uint64_t seq = next_sequence_++;
    heap_.push(Entry{at, seq, std::move(action)});
    return seq;
}

EventQueue::Entry EventQueue::pop() {
    // priority_queue::top() is const; the action is moved out through a copy of the handle.
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    return e;
}

void Simulator::schedule(Time at, Action action) {
    if (at < now_) {
        throw std::logic_error("event scheduled in the past: at=" + std::to_string(at) +
                               " now=" + std::to_string(now_));
    }
    queue_.push(at, std::move(action));
}

bool Simulator::step() {
    if (queue_.empty()) return false;
    EventQueue::Entry e = queue_.pop();
    now_ = e.at;
    ++processed_;
    e.action();
    return true;
}

void Simulator::run_until(Time end) {
    while (!queue_.empty() && queue_.next_time() <= end) step();
    if (end > now_) now_ = end;
}

}  // namespace hmptcp::sim
