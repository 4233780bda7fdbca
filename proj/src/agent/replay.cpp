#include "hmptcp/agent/replay.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace hmptcp::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("replay index out of range");
    const std::size_t oldest = items_.size() < capacity_ ? 0 : head_;
    return items_[(oldest + i) % items_.size()];
}

void ReplayBuffer::clear() {
    items_.clear();
    head_ = 0;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, sim::RandomStream& rng) const {
    const std::size_t n = items_.size();
    if (k > n) throw std::invalid_argument("replay holds fewer transitions than the minibatch size");
    // Floyd's algorithm: k distinct values from [0, n) without materialising the range.
    std::vector<std::size_t> out;
    out.reserve(k);
    std::unordered_set<std::size_t> chosen;
    for (std::size_t j = n - k; j < n; ++j) {
        const std::size_t t = rng.index(j + 1);
        const std::size_t pick = chosen.count(t) ? j : t;
        chosen.insert(pick);
        out.push_back(pick);
    }
    return out;
}

}  // namespace hmptcp::agent
