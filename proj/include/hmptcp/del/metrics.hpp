#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hmptcp::del {

/// Population standard deviation of per-worker iteration counts.
/// Throws std::invalid_argument with fewer than two workers.
double unfairness(std::span<const int> iterations);

/// True iff sum_u (rate_u - ref_u) / ref_u <= 1e-9, i.e. `candidate` does not
/// improve on `reference` in aggregate proportional terms. Throws
/// std::invalid_argument on a size mismatch or a non-positive reference rate.
bool proportional_fairness_check(std::span<const double> candidate, std::span<const double> reference);

/// Links with capacities and, for every user, the links its traffic crosses.
struct LinkModel {
    std::vector<double> capacities;
    std::vector<std::vector<std::size_t>> routes;

    /// Every user on a single shared link.
    static LinkModel single_link(double capacity, std::size_t users);
    /// One private link per user.
    static LinkModel disjoint(std::vector<double> capacities);
};

/// Progressive filling: raise all unfrozen rates together, freezing users on
/// each link as it saturates. Returns the unique max-min fair allocation.
std::vector<double> max_min_allocation(const LinkModel& model);

/// True iff `rates` matches the water-filling allocation within 1e-6 of the
/// largest capacity. Throws std::invalid_argument if `rates` is infeasible.
bool max_min_check(std::span<const double> rates, const LinkModel& model);

/// Sum of ln(rate). Throws std::invalid_argument on a non-positive rate.
double aggregate_utility(std::span<const double> rates);

/// Mean absolute change between consecutive samples. Throws
/// std::invalid_argument on fewer than two samples.
double throughput_fluctuation(std::span<const double> series);

}  // namespace hmptcp::del
