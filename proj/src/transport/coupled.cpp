#include "hmptcp/transport/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hmptcp::transport {

namespace {

void check_inputs(std::span<const double> windows, std::span<const double> rtts) {
    if (windows.empty()) throw std::invalid_argument("no subflows");
    if (windows.size() != rtts.size()) throw std::invalid_argument("windows/rtts size mismatch");
    for (double r : rtts) {
        if (!(r > 0.0)) throw std::invalid_argument("rtt must be positive");
    }
}

}  // namespace

double lia_alpha(std::span<const double> windows, std::span<const double> rtts) {
    check_inputs(windows, rtts);
    if (windows.size() == 1) return 1.0 / windows[0];
    double best = 0.0, total = 0.0;
    for (std::size_t j = 0; j < windows.size(); ++j) {
        best = std::max(best, windows[j] / (rtts[j] * rtts[j]));
        total += windows[j] / rtts[j];
    }
    return best / (total * total);
}

double lia_increase(std::span<const double> windows, std::span<const double> rtts, std::size_t i) {
    return std::min(1.0 / windows[i], lia_alpha(windows, rtts));
}

Schedule::Schedule(std::vector<double> probs) : probs_(std::move(probs)) {
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw std::invalid_argument("schedule entries must be non-negative");
        sum += p;
    }
    if (probs_.empty() || std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("schedule must sum to 1");
}

Schedule Schedule::uniform(std::size_t n) { return Schedule(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

Schedule compute_schedule(std::span<const double> windows, std::span<const double> rtts) {
    check_inputs(windows, rtts);
    std::vector<double> rates(windows.size());
    double total = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        rates[i] = windows[i] / rtts[i];
        total += rates[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("cannot normalise an all-zero window vector");
    for (double& r : rates) r /= total;
    // Absorb rounding so the invariant sum == 1 holds tightly.
    const double drift = 1.0 - std::accumulate(rates.begin(), rates.end(), 0.0);
    auto biggest = std::max_element(rates.begin(), rates.end());
    *biggest = std::max(0.0, *biggest + drift);
    return Schedule(std::move(rates));
}

std::vector<int> apportion(int batch, const Schedule& schedule, std::span<const int> space) {
    const std::size_t n = schedule.size();
    if (space.size() != n) throw std::invalid_argument("space/schedule size mismatch");
    std::vector<int> out(n, 0);
    int remaining = std::max(batch, 0);

    std::vector<double> weight(schedule.probs().begin(), schedule.probs().end());
    while (remaining > 0) {
        std::vector<std::size_t> open;
        for (std::size_t i = 0; i < n; ++i) {
            if (out[i] < space[i]) open.push_back(i);
        }
        if (open.empty()) break;

        double wsum = 0.0;
        for (auto i : open) wsum += weight[i];
        // Only zero-probability subflows have room left: fall back to equal shares.
        std::vector<double> share(n, 0.0);
        for (auto i : open) share[i] = wsum > 0.0 ? weight[i] / wsum : 1.0 / static_cast<double>(open.size());

        std::vector<int> grant(n, 0);
        std::vector<std::pair<double, std::size_t>> remainders;
        int handed = 0;
        for (auto i : open) {
            const double quota = remaining * share[i];
            grant[i] = static_cast<int>(std::floor(quota));
            handed += grant[i];
            remainders.emplace_back(quota - grant[i], i);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t r = 0; handed < remaining && r < remainders.size(); ++r) {
            if (share[remainders[r].second] > 0.0) {
                ++grant[remainders[r].second];
                ++handed;
            }
        }

        int placed = 0;
        for (auto i : open) {
            const int take = std::min(grant[i], space[i] - out[i]);
            out[i] += take;
            placed += take;
        }
        remaining -= placed;
        if (placed == 0) {
            // Quotas rounded to zero for every subflow with room; give one packet to the best-weighted one.
            std::size_t best = open.front();
            for (auto i : open) {
                if (share[i] > share[best]) best = i;
            }
            ++out[best];
            --remaining;
        }
    }
    return out;
}

}  // namespace hmptcp::transport
