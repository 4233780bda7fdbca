#pragma once

#include <array>
#include <span>
#include <vector>

#include "hmptcp/nn/matrix.hpp"
#include "hmptcp/transport/connection.hpp"

namespace hmptcp::agent {

/// Per-subflow state measured over one decision slot.
struct SubflowObservation {
    double sending_rate = 0.0;  // packets/s
    double throughput = 0.0;    // delivered packets/s
    double rtt = 0.0;           // s
    double cwnd_delta = 0.0;    // packets
    double schedule_share = 0.0;
    double rtt_diff = 0.0;  // s, rtt minus the connection's smallest rtt

    friend bool operator==(const SubflowObservation&, const SubflowObservation&) = default;
};

inline constexpr std::size_t kFeatureCount = 6;
inline constexpr double kRateScale = 1e4;
inline constexpr double kRttScale = 0.3;
inline constexpr double kCwndScale = 100.0;
/// Rates below this are treated as this value inside the logarithm.
inline constexpr double kRateFloor = 1e-3;

using Observation = std::vector<SubflowObservation>;

Observation observe(std::span<const transport::SubflowSlotStats> slot);

std::array<double, kFeatureCount> normalize(const SubflowObservation& o);

/// Packs a batch of equally long observations into LSTM input, one matrix per
/// subflow position (batch x kFeatureCount). Throws std::invalid_argument on
/// an empty batch, an empty observation or unequal lengths.
std::vector<nn::Matrix> to_sequence(std::span<const Observation* const> batch);

/// Sum over subflows of ln(max(rate, kRateFloor)).
double compute_reward(std::span<const double> delivered_rates);
double compute_reward(const Observation& o);

}  // namespace hmptcp::agent
