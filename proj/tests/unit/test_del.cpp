#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "hmptcp/del/metrics.hpp"
#include "hmptcp/del/workload.hpp"
#include "hmptcp/sim/network.hpp"

using namespace hmptcp;
using namespace hmptcp::del;

namespace {

// Every vector of n grid multiples (0..steps) whose sum is at most `steps`.
void for_each_split(std::size_t n, int steps, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> v(n, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i == n) {
            fn(v);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            v[i] = k;
            rec(i + 1, left - k);
        }
    };
    rec(0, steps);
}

// Definition of max-min fairness on one link, checked against grid alternatives:
// some rate can be raised while only rates strictly above it are lowered.
bool max_min_by_search(const std::vector<double>& rate, double capacity, int steps) {
    bool improvable = false;
    for_each_split(rate.size(), steps, [&](const std::vector<int>& g) {
        if (improvable) return;
        for (std::size_t u = 0; u < rate.size(); ++u) {
            const double raised = g[u] * capacity / steps;
            if (raised <= rate[u] + 1e-9) continue;
            bool ok = true;
            for (std::size_t v = 0; v < rate.size() && ok; ++v) {
                const double alt = g[v] * capacity / steps;
                if (alt < rate[v] - 1e-9 && !(rate[v] > rate[u] + 1e-9)) ok = false;
            }
            if (ok) {
                improvable = true;
                return;
            }
        }
    });
    return !improvable;
}

struct Bed {
    sim::Simulator sim;
    sim::Network net{sim, 17};
    std::vector<std::unique_ptr<transport::MptcpConnection>> conns;

    transport::MptcpConnection& add(std::vector<int> paths) {
        conns.push_back(std::make_unique<transport::MptcpConnection>(
            net, std::move(paths), transport::ConnectionOptions{transport::ControllerKind::Lia}));
        return *conns.back();
    }
};

}  // namespace

TEST_CASE("unfairness examples") {
    CHECK(unfairness(std::vector<int>{5, 5, 5}) == 0.0);
    CHECK(unfairness(std::vector<int>{4, 6}) == 1.0);
    CHECK(unfairness(std::vector<int>{3, 5, 7}) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-15));
    CHECK_THROWS_AS(unfairness(std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("proportional fairness examples") {
    const std::vector<double> ref{2.0, 3.0};
    CHECK(proportional_fairness_check(ref, ref));
    CHECK_FALSE(proportional_fairness_check(std::vector<double>{4.0, 6.0}, ref));
    CHECK_THROWS_AS(proportional_fairness_check(ref, std::vector<double>{0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(proportional_fairness_check(ref, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("equal split is the proportionally fair point of a shared link") {
    const double c = 10.0;
    const int steps = 100;
    for (std::size_t n = 1; n <= 3; ++n) {
        const std::vector<double> star(n, c / n);
        bool all_pass = true;
        double best_utility = -1e300;
        std::vector<double> best;
        for_each_split(n, steps, [&](const std::vector<int>& g) {
            std::vector<double> r(n);
            for (std::size_t u = 0; u < n; ++u) r[u] = g[u] * c / steps;
            all_pass = all_pass && proportional_fairness_check(r, star);
            if (std::all_of(r.begin(), r.end(), [](double x) { return x > 0; })) {
                const double util = aggregate_utility(r);
                if (util > best_utility) {
                    best_utility = util;
                    best = r;
                }
                // Any other positive split is beaten by the equal split.
                const bool same = std::all_of(r.begin(), r.end(), [&](double x) { return std::abs(x - c / n) < 1e-9; });
                if (!same && std::abs(std::accumulate(r.begin(), r.end(), 0.0) - c) < 1e-9) {
                    REQUIRE_FALSE(proportional_fairness_check(star, r));
                }
            }
        });
        CHECK(all_pass);
        if (n != 3) {
            for (double x : best) CHECK(x == doctest::Approx(c / n));
        }
        CHECK(best_utility <= aggregate_utility(star) + 1e-12);
    }
}

TEST_CASE("max-min examples") {
    CHECK(max_min_check(std::vector<double>{5.0, 5.0}, LinkModel::single_link(10.0, 2)));
    CHECK(max_min_check(std::vector<double>{10.0, 4.0}, LinkModel::disjoint({10.0, 4.0})));
    CHECK_FALSE(max_min_check(std::vector<double>{8.0, 2.0}, LinkModel::single_link(10.0, 2)));
    CHECK_FALSE(max_min_check(std::vector<double>{4.0, 4.0}, LinkModel::single_link(10.0, 2)));
    CHECK_THROWS_AS(max_min_check(std::vector<double>{8.0, 4.0}, LinkModel::single_link(10.0, 2)),
                    std::invalid_argument);

    LinkModel line;
    line.capacities = {1.0, 2.0};
    line.routes = {{0}, {0, 1}, {1}};
    const auto r = max_min_allocation(line);
    CHECK(r[0] == doctest::Approx(0.5));
    CHECK(r[1] == doctest::Approx(0.5));
    CHECK(r[2] == doctest::Approx(1.5));
}

TEST_CASE("max-min check agrees with the definition on a grid") {
    const double c = 10.0;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto model = LinkModel::single_link(c, n);
        for_each_split(n, 10, [&](const std::vector<int>& g) {
            std::vector<double> r(n);
            for (std::size_t u = 0; u < n; ++u) r[u] = g[u];
            REQUIRE(max_min_check(r, model) == max_min_by_search(r, c, 100));
        });
        const std::vector<double> equal(n, c / n);
        CHECK(max_min_check(equal, model));
    }
}

TEST_CASE("utility and fluctuation examples") {
    CHECK(aggregate_utility(std::vector<double>{1, 1, 1}) == 0.0);
    CHECK(aggregate_utility(std::vector<double>{std::exp(2.0)}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(aggregate_utility(std::vector<double>{1.0, 0.0}), std::invalid_argument);
    CHECK(throughput_fluctuation(std::vector<double>{3, 3, 3}) == 0.0);
    CHECK(throughput_fluctuation(std::vector<double>{0, 10, 0, 10}) == 10.0);
    CHECK(throughput_fluctuation(std::vector<double>{7, 7.5, 7}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(throughput_fluctuation(std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("barrier check examples") {
    const std::vector<int> bsp_iters{3, 3, 2};
    CHECK(barrier_check(ParallelismScheme::bsp(), bsp_iters, {true, true, false}).empty());
    CHECK(barrier_check(ParallelismScheme::bsp(), std::vector<int>{3, 3, 3}, {true, true, true}).size() == 3);
    const auto ssp = barrier_check(ParallelismScheme::ssp(2), std::vector<int>{5, 5, 3}, {true, true, true});
    CHECK(ssp == std::vector<std::size_t>{2});
    CHECK(barrier_check(ParallelismScheme::tap(), std::vector<int>{9, 1}, {true, false}) == std::vector<std::size_t>{0});
    CHECK(parse_scheme("ssp:3").staleness == 3);
    CHECK(to_string(parse_scheme("bsp")) == "bsp");
    CHECK_THROWS_AS(parse_scheme("ssp:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scheme("psp"), std::invalid_argument);
}

TEST_CASE("iteration time on a fast path is two transfers plus compute") {
    Bed b;
    const int p = b.net.add_path({sim::CapacityTrace(1e10), 1e-5, 0.0, 1000});
    auto& c = b.add({p});
    DelWorkload wl(b.sim, ParallelismScheme::tap(), 1);
    wl.add_worker(c, WorkerConfig{1000, 0.5, 0.0});
    wl.start();
    b.sim.run_until(10.0);
    const auto& w = wl.workers()[0];
    REQUIRE(w.iterations >= 19);
    const double transfer = w.flows[0].departure - w.flows[0].arrival;
    CHECK(transfer < 1e-3);
    CHECK(wl.mean_iteration_time(b.sim.now()) == doctest::Approx(2 * transfer + 0.5).epsilon(1e-9));
    for (const auto& f : w.flows) CHECK(f.departure >= f.arrival);
}

TEST_CASE("bsp gates every worker on the straggler") {
    Bed b;
    const int fast = b.net.add_path({sim::CapacityTrace(10e6), 0.01, 0.0, 200});
    const int slow = b.net.add_path({sim::CapacityTrace(1e6), 0.01, 0.0, 200});
    auto& c0 = b.add({fast});
    auto& c1 = b.add({slow});
    DelWorkload wl(b.sim, ParallelismScheme::bsp(), 2);
    wl.add_worker(c0, WorkerConfig{150'000, 0.2, 0.0});
    wl.add_worker(c1, WorkerConfig{150'000, 0.2, 0.0});
    int spread_violations = 0;
    wl.set_observer([&](const DelWorkload& d) {
        const auto it = d.iterations();
        if (*std::max_element(it.begin(), it.end()) - *std::min_element(it.begin(), it.end()) > 1) ++spread_violations;
    });
    wl.start();
    b.sim.run_until(60.0);
    CHECK(spread_violations == 0);
    const auto& a = wl.workers()[0].completed;
    const auto& s = wl.workers()[1].completed;
    REQUIRE(a.size() >= 3);
    REQUIRE(a.size() == s.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].start == s[i].start);
        CHECK(a[i].released == s[i].released);
        CHECK(a[i].active < s[i].active);
    }
    CHECK(wl.straggler(b.sim.now()) == 1);
    const auto bytes = c1.subflow(0).bytes_acked;
    CHECK(bytes >= static_cast<std::uint64_t>(2 * 150'000 * wl.workers()[1].iterations));
}

TEST_CASE("ssp bounds the iteration gap and tap does not") {
    for (int s : {1, 2, 3}) {
        Bed b;
        const int fast = b.net.add_path({sim::CapacityTrace(20e6), 0.005, 0.0, 200});
        const int slow = b.net.add_path({sim::CapacityTrace(1e6), 0.005, 0.0, 200});
        DelWorkload wl(b.sim, ParallelismScheme::ssp(s), 3);
        wl.add_worker(b.add({fast}), WorkerConfig{30'000, 0.05, 0.1});
        wl.add_worker(b.add({fast}), WorkerConfig{30'000, 0.05, 0.1});
        wl.add_worker(b.add({slow}), WorkerConfig{30'000, 0.05, 0.1});
        int worst = 0;
        wl.set_observer([&](const DelWorkload& d) {
            const auto it = d.iterations();
            worst = std::max(worst, *std::max_element(it.begin(), it.end()) - *std::min_element(it.begin(), it.end()));
        });
        wl.start();
        b.sim.run_until(30.0);
        CHECK(worst <= s);
        CHECK(worst == s);
    }
    Bed b;
    const int fast = b.net.add_path({sim::CapacityTrace(20e6), 0.005, 0.0, 200});
    const int slow = b.net.add_path({sim::CapacityTrace(1e6), 0.005, 0.0, 200});
    DelWorkload wl(b.sim, ParallelismScheme::tap(), 3);
    wl.add_worker(b.add({fast}), WorkerConfig{30'000, 0.05, 0.1});
    wl.add_worker(b.add({slow}), WorkerConfig{30'000, 0.05, 0.1});
    wl.start();
    b.sim.run_until(30.0);
    const auto it = wl.iterations();
    CHECK(it[0] - it[1] > 20);
}

TEST_CASE("identical workers stay level under every scheme") {
    for (auto scheme : {ParallelismScheme::bsp(), ParallelismScheme::ssp(2), ParallelismScheme::tap()}) {
        Bed b;
        DelWorkload wl(b.sim, scheme, 4);
        for (int u = 0; u < 3; ++u) {
            const int p = b.net.add_path({sim::CapacityTrace(5e6), 0.02, 0.0, 100});
            wl.add_worker(b.add({p}), WorkerConfig{40'000, 0.3, 0.0});
        }
        wl.start();
        for (int k = 1; k <= 200; ++k) {
            b.sim.run_until(0.1 * k);
            wl.sample_unfairness();
        }
        CHECK(wl.mean_unfairness() == 0.0);
        CHECK(wl.workers()[0].iterations > 3);
    }
}

TEST_CASE("workload rejects bad worker configs") {
    Bed b;
    const int p = b.net.add_path({sim::CapacityTrace(5e6), 0.02, 0.0, 100});
    auto& c = b.add({p});
    DelWorkload wl(b.sim, ParallelismScheme::bsp(), 1);
    CHECK_THROWS_AS(wl.add_worker(c, WorkerConfig{0, 0.5, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(wl.add_worker(c, WorkerConfig{10, -1.0, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(wl.add_worker(c, WorkerConfig{10, 0.5, 1.5}), std::invalid_argument);
}
