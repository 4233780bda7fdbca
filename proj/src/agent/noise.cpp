#include "hmptcp/agent/noise.hpp"

#include <cmath>

namespace hmptcp::agent {

OuNoise::OuNoise(std::size_t dim, sim::RandomStream rng, OuParams params)
    : p_(params), rng_(std::move(rng)), x_(dim, params.mu) {}

const std::vector<double>& OuNoise::step() {
    const double scale = p_.sigma * std::sqrt(p_.dt);
    for (double& x : x_) x += p_.theta * (p_.mu - x) * p_.dt + scale * rng_.normal();
    return x_;
}

void OuNoise::reset() {
    for (double& x : x_) x = p_.mu;
}

}  // namespace hmptcp::agent
