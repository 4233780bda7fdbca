#include "hmptcp/del/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hmptcp::del {

double unfairness(std::span<const int> iterations) {
    if (iterations.size() < 2) throw std::invalid_argument("unfairness needs at least two workers");
    double mean = 0.0;
    for (int i : iterations) mean += i;
    mean /= static_cast<double>(iterations.size());
    double var = 0.0;
    for (int i : iterations) var += (i - mean) * (i - mean);
    return std::sqrt(var / static_cast<double>(iterations.size()));
}

bool proportional_fairness_check(std::span<const double> candidate, std::span<const double> reference) {
    if (candidate.size() != reference.size()) throw std::invalid_argument("rate vectors differ in length");
    double sum = 0.0;
    for (std::size_t u = 0; u < reference.size(); ++u) {
        if (!(reference[u] > 0.0)) throw std::invalid_argument("reference rate " + std::to_string(u) + " is not positive");
        sum += (candidate[u] - reference[u]) / reference[u];
    }
    return sum <= 1e-9;
}

LinkModel LinkModel::single_link(double capacity, std::size_t users) {
    LinkModel m;
    m.capacities = {capacity};
    m.routes.assign(users, {0});
    return m;
}

LinkModel LinkModel::disjoint(std::vector<double> capacities) {
    LinkModel m;
    m.routes.resize(capacities.size());
    for (std::size_t u = 0; u < capacities.size(); ++u) m.routes[u] = {u};
    m.capacities = std::move(capacities);
    return m;
}

namespace {

void validate(const LinkModel& m) {
    for (double c : m.capacities) {
        if (!(c > 0.0)) throw std::invalid_argument("link capacity must be positive");
    }
    for (const auto& r : m.routes) {
        if (r.empty()) throw std::invalid_argument("every user needs at least one link");
        for (auto l : r) {
            if (l >= m.capacities.size()) throw std::invalid_argument("route references unknown link " + std::to_string(l));
        }
    }
}

}  // namespace

std::vector<double> max_min_allocation(const LinkModel& m) {
    validate(m);
    const std::size_t n = m.routes.size();
    std::vector<double> rate(n, 0.0);
    std::vector<bool> frozen(n, false);
    std::vector<double> left = m.capacities;
    std::size_t active = n;
    while (active > 0) {
        // Smallest equal increment that saturates some link.
        double step = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> users_on(m.capacities.size(), 0);
        for (std::size_t u = 0; u < n; ++u) {
            if (frozen[u]) continue;
            for (auto l : m.routes[u]) ++users_on[l];
        }
        for (std::size_t l = 0; l < left.size(); ++l) {
            if (users_on[l] > 0) step = std::min(step, left[l] / static_cast<double>(users_on[l]));
        }
        for (std::size_t u = 0; u < n; ++u) {
            if (!frozen[u]) rate[u] += step;
        }
        for (std::size_t l = 0; l < left.size(); ++l) left[l] -= step * static_cast<double>(users_on[l]);
        const double eps = 1e-12 * *std::max_element(m.capacities.begin(), m.capacities.end());
        for (std::size_t u = 0; u < n; ++u) {
            if (frozen[u]) continue;
            for (auto l : m.routes[u]) {
                if (left[l] <= eps) {
                    frozen[u] = true;
                    --active;
                    break;
                }
            }
        }
    }
    return rate;
}

bool max_min_check(std::span<const double> rates, const LinkModel& m) {
    validate(m);
    if (rates.size() != m.routes.size()) throw std::invalid_argument("one rate per user expected");
    const double tol = 1e-6 * *std::max_element(m.capacities.begin(), m.capacities.end());
    std::vector<double> load(m.capacities.size(), 0.0);
    for (std::size_t u = 0; u < rates.size(); ++u) {
        if (rates[u] < 0.0) throw std::invalid_argument("negative rate");
        for (auto l : m.routes[u]) load[l] += rates[u];
    }
    for (std::size_t l = 0; l < load.size(); ++l) {
        if (load[l] > m.capacities[l] + tol) {
            throw std::invalid_argument("allocation exceeds the capacity of link " + std::to_string(l));
        }
    }
    const auto ref = max_min_allocation(m);
    for (std::size_t u = 0; u < rates.size(); ++u) {
        if (std::abs(rates[u] - ref[u]) > tol) return false;
    }
    return true;
}

double aggregate_utility(std::span<const double> rates) {
    double sum = 0.0;
    for (double r : rates) {
        if (!(r > 0.0)) throw std::invalid_argument("utility needs positive rates");
        sum += std::log(r);
    }
    return sum;
}

double throughput_fluctuation(std::span<const double> series) {
    if (series.size() < 2) throw std::invalid_argument("fluctuation needs at least two samples");
    double sum = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) sum += std::abs(series[t] - series[t - 1]);
    return sum / static_cast<double>(series.size() - 1);
}

}  // namespace hmptcp::del
