#pragma once

#include <cstddef>
#include <vector>

#include "hmptcp/agent/observation.hpp"
#include "hmptcp/sim/random.hpp"

namespace hmptcp::agent {

struct Transition {
    Observation state;
    std::vector<double> action;
    double reward = 0.0;
    Observation next_state;
};

inline constexpr std::size_t kReplayCapacity = 2024;

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = kReplayCapacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    /// i-th entry in insertion order among those retained (0 = oldest).
    const Transition& at(std::size_t i) const;
    void clear();

    /// k distinct storage slots drawn uniformly. Throws std::invalid_argument when k > size().
    std::vector<std::size_t> sample_indices(std::size_t k, sim::RandomStream& rng) const;
    const Transition& slot(std::size_t s) const { return items_.at(s); }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> items_;
};

}  // namespace hmptcp::agent
