#include "hmptcp/transport/cubic.hpp"

#include <algorithm>
#include <cmath>

#include "hmptcp/transport/coupled.hpp"

namespace hmptcp::transport {

CubicState cubic_epoch(double w_max, double now) {
    return CubicState{w_max, now, std::cbrt(w_max * (1.0 - kCubicBeta) / kCubicC)};
}

double cubic_window(const CubicState& state, double t) {
    const double d = t - state.epoch_start - state.k;
    return std::max(kMinWindow, kCubicC * d * d * d + state.w_max);
}

double cubic_on_loss(CubicState& state, double cwnd, double now) {
    state = cubic_epoch(cwnd, now);
    return std::max(kMinWindow, kCubicBeta * cwnd);
}

double cubic_on_ack(const CubicState& state, double cwnd, double now, double srtt) {
    const double target = cubic_window(state, now + srtt);
    if (target > cwnd) return cwnd + (target - cwnd) / cwnd;
    return cwnd + 0.01 / cwnd;
}

}  // namespace hmptcp::transport
