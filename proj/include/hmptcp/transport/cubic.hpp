#pragma once

namespace hmptcp::transport {

inline constexpr double kCubicC = 0.4;
inline constexpr double kCubicBeta = 0.7;

struct CubicState {
    double w_max = 0.0;
    double epoch_start = 0.0;
    /// Time from the epoch start to the plateau at w_max.
    double k = 0.0;
};

/// Starts a growth epoch at `now` with the plateau at `w_max`, placing the
/// curve at beta * w_max at the epoch start.
CubicState cubic_epoch(double w_max, double now);

/// W(t) = C (t - epoch_start - K)^3 + w_max, clamped to the minimum window.
double cubic_window(const CubicState& state, double t);

/// Multiplicative decrease. Records w_max, restarts the epoch and returns the new window.
double cubic_on_loss(CubicState& state, double cwnd, double now);

/// Per-ACK growth towards the curve value one RTT ahead.
double cubic_on_ack(const CubicState& state, double cwnd, double now, double srtt);

}  // namespace hmptcp::transport
