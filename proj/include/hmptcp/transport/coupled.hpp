#pragma once

#include <span>
#include <vector>

namespace hmptcp::transport {

/// Smallest congestion window any controller may hold, in packets.
inline constexpr double kMinWindow = 2.0;

/// LIA increase cap: max_j(w_j / rtt_j^2) / (sum_j w_j / rtt_j)^2.
/// Throws std::invalid_argument on empty input, size mismatch or a non-positive rtt.
double lia_alpha(std::span<const double> windows, std::span<const double> rtts);

/// Per-ACK window increment of subflow `i`: min(1 / w_i, alpha).
double lia_increase(std::span<const double> windows, std::span<const double> rtts, std::size_t i);

/// Probability vector telling the dispatcher what share of packets each subflow carries.
class Schedule {
public:
    Schedule() = default;
    /// Throws std::invalid_argument unless entries are non-negative and sum to 1 (+-1e-9).
    explicit Schedule(std::vector<double> probs);

    static Schedule uniform(std::size_t n);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const { return probs_; }

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    std::vector<double> probs_;
};

/// h_i = (w_i / rtt_i) / sum_j (w_j / rtt_j).
Schedule compute_schedule(std::span<const double> windows, std::span<const double> rtts);

/// Splits `batch` packets across subflows in proportion to `schedule` using
/// largest-remainder apportionment (ties go to the lower index), never giving
/// a subflow more than `space[i]`. Packets that do not fit are re-apportioned
/// over the subflows that still have room.
std::vector<int> apportion(int batch, const Schedule& schedule, std::span<const int> space);

}  // namespace hmptcp::transport
