#pragma once

#include <vector>

#include "hmptcp/sim/random.hpp"

namespace hmptcp::agent {

struct OuParams {
    double theta = 0.15;
    double mu = 0.0;
    double sigma = 0.2;
    double dt = 1.0;
};

/// Ornstein-Uhlenbeck process, one independent coordinate per action dimension:
///   x <- x + theta (mu - x) dt + sigma sqrt(dt) N(0,1)
class OuNoise {
public:
    OuNoise(std::size_t dim, sim::RandomStream rng, OuParams params = {});

    const std::vector<double>& step();
    void reset();

    const std::vector<double>& state() const { return x_; }
    void set_state(std::vector<double> x) { x_ = std::move(x); }
    const OuParams& params() const { return p_; }

private:
    OuParams p_;
    sim::RandomStream rng_;
    std::vector<double> x_;
};

}  // namespace hmptcp::agent
