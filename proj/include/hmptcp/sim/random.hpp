#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hmptcp::sim {

/// Derives an independent seed for a named consumer (a path's loss process,
/// a worker's compute jitter, an agent's noise). Each consumer gets its own
/// stream so adding one never shifts another's draws.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

class RandomStream {
public:
    RandomStream() : RandomStream(0) {}
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t base, std::string_view label) : engine_(derive_seed(base, label)) {}

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return normal_(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hmptcp::sim
