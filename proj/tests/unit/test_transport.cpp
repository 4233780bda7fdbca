#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "hmptcp/sim/network.hpp"
#include "hmptcp/sim/random.hpp"
#include "hmptcp/transport/connection.hpp"
#include "hmptcp/transport/coupled.hpp"
#include "hmptcp/transport/cubic.hpp"

using namespace hmptcp;
using namespace hmptcp::transport;

namespace {

// Independent evaluation in long double: alpha = w_total * max(w/rtt^2) / (sum w/rtt)^2 / w_total.
long double alpha_oracle(const std::vector<double>& w, const std::vector<double>& r) {
    long double best = 0, denom = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const long double term = static_cast<long double>(w[j]) / (static_cast<long double>(r[j]) * r[j]);
        if (term > best) best = term;
        denom += static_cast<long double>(w[j]) / r[j];
    }
    return best / (denom * denom);
}

}  // namespace

TEST_CASE("lia alpha worked example") {
    const std::vector<double> w{2, 1000}, r{0.1, 0.1};
    CHECK(lia_alpha(w, r) == doctest::Approx(1000.0 / (1002.0 * 1002.0)).epsilon(1e-14));
    CHECK(lia_alpha(w, r) == doctest::Approx(9.96e-4).epsilon(1e-3));
    CHECK(lia_increase(w, r, 0) == doctest::Approx(lia_alpha(w, r)));
}

TEST_CASE("single-path lia is reno") {
    for (double w : {2.0, 7.5, 100.0}) {
        const std::vector<double> ws{w}, rs{0.08};
        CHECK(lia_increase(ws, rs, 0) == doctest::Approx(1.0 / w).epsilon(1e-14));
    }
}

TEST_CASE("lia alpha matches a long double oracle") {
    sim::RandomStream gen(42);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + gen.index(4);
        std::vector<double> w(n), r(n);
        for (std::size_t j = 0; j < n; ++j) {
            w[j] = gen.uniform(2.0, 2000.0);
            r[j] = gen.uniform(0.003, 0.3);
        }
        const double ours = lia_alpha(w, r);
        const double ref = static_cast<double>(alpha_oracle(w, r));
        REQUIRE(std::abs(ours - ref) / ref <= 1e-12);
    }
    CHECK_THROWS_AS(lia_alpha(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(lia_alpha(std::vector<double>{2}, std::vector<double>{0}), std::invalid_argument);
}

TEST_CASE("schedule is rate-proportional and sums to one") {
    const std::vector<double> w{30, 10}, r{0.1, 0.1};
    const auto h = compute_schedule(w, r);
    CHECK(h[0] == doctest::Approx(0.75));
    CHECK(h[1] == doctest::Approx(0.25));
    const std::vector<int> space{10, 10};
    CHECK(apportion(4, h, space) == std::vector<int>{3, 1});

    sim::RandomStream gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen.index(6);
        std::vector<double> ws(n), rs(n);
        for (std::size_t j = 0; j < n; ++j) {
            ws[j] = gen.uniform(2.0, 500.0);
            rs[j] = gen.uniform(0.003, 0.3);
        }
        const auto s = compute_schedule(ws, rs);
        const auto p = s.probs();
        REQUIRE(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
        for (double x : p) REQUIRE(x >= 0.0);
    }
    CHECK_THROWS_AS(Schedule({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(Schedule({-0.1, 1.1}), std::invalid_argument);
}

// Property: apportionment never exceeds window space and places min(batch, total space) packets.
TEST_CASE("apportion respects space") {
    sim::RandomStream gen(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + gen.index(5);
        std::vector<double> raw(n);
        double sum = 0;
        for (auto& x : raw) {
            x = gen.bernoulli(0.2) ? 0.0 : gen.uniform();
            sum += x;
        }
        if (sum == 0.0) raw[0] = sum = 1.0;
        for (auto& x : raw) x /= sum;
        raw[0] += 1.0 - std::accumulate(raw.begin(), raw.end(), 0.0);
        if (raw[0] < 0) raw[0] = 0;
        const Schedule s(raw);
        std::vector<int> space(n);
        int total = 0;
        for (auto& x : space) total += x = static_cast<int>(gen.index(20));
        const int batch = static_cast<int>(gen.index(60));
        const auto out = apportion(batch, s, space);
        int placed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(out[i] >= 0);
            REQUIRE(out[i] <= space[i]);
            placed += out[i];
        }
        REQUIRE(placed == std::min(batch, total));
    }
}

TEST_CASE("cubic epoch starts at beta times w_max and plateaus at w_max") {
    const auto st = cubic_epoch(10.0, 5.0);
    CHECK(cubic_window(st, 5.0) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(cubic_window(st, 5.0 + st.k) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(st.k == doctest::Approx(std::cbrt(10.0 * 0.3 / 0.4)));
    CubicState s;
    CHECK(cubic_on_loss(s, 10.0, 1.0) == doctest::Approx(7.0));
    CHECK(s.w_max == 10.0);
    CHECK(cubic_on_loss(s, 2.0, 1.0) == kMinWindow);
}

namespace {

struct Bed {
    sim::Simulator sim;
    sim::PacketLog log{false};
    sim::Network net{sim, 9, &log};
};

}  // namespace

TEST_CASE("a lossless transfer completes and the window only grows") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.01, 0.0, 1000});
    MptcpConnection c(b.net, {p0}, ConnectionOptions{ControllerKind::Lia});
    double done_at = -1;
    c.start_transfer(1'500'000, [&](double t) { done_at = t; });
    b.sim.run_until(60.0);
    CHECK(done_at > 0.0);
    CHECK(c.total_packets_acked() == 1000);
    CHECK(c.subflow(0).loss_events == 0);
    CHECK(c.subflow(0).cwnd > 2.0);
    CHECK(c.idle());
}

TEST_CASE("odd-sized transfer sends a short final packet") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.01, 0.0, 1000});
    MptcpConnection c(b.net, {p0}, ConnectionOptions{ControllerKind::Lia});
    bool done = false;
    c.start_transfer(3001, [&](double) { done = true; });
    CHECK(c.app_queue_bytes() == 1);
    b.sim.run_until(5.0);
    CHECK(done);
    CHECK(c.subflow(0).bytes_acked == 3001);
}

TEST_CASE("lossy multipath transfer delivers every byte") {
    for (auto kind : {ControllerKind::Lia, ControllerKind::Hybrid}) {
        Bed b;
        const int p0 = b.net.add_path({sim::CapacityTrace(8e6), 0.05, 0.03, 100});
        const int p1 = b.net.add_path({sim::CapacityTrace(4e6), 0.02, 0.03, 30});
        MptcpConnection c(b.net, {p0, p1}, ConnectionOptions{kind});
        bool done = false;
        c.start_transfer(3'000'000, [&](double) { done = true; });
        b.sim.run_until(120.0);
        CHECK(done);
        CHECK(c.subflow(0).bytes_acked + c.subflow(1).bytes_acked == 3'000'000);
        CHECK(c.subflow(0).retransmissions + c.subflow(1).retransmissions > 0);
    }
}

TEST_CASE("a saturating single-path flow runs near capacity") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.01, 0.0, 50});
    MptcpConnection c(b.net, {p0}, ConnectionOptions{ControllerKind::SinglePathCubic});
    c.start_transfer(1'000'000'000);
    // No slow start: give the cubic curve time to reach the pipe size.
    b.sim.run_until(10.0);
    const auto before = c.subflow(0).bytes_acked;
    b.sim.run_until(30.0);
    const double tput = (c.subflow(0).bytes_acked - before) * 8.0 / 20.0;
    CHECK(tput > 0.9 * 10e6);
}

TEST_CASE("loss halves an lia window with a floor") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.01, 0.0, 100});
    MptcpConnection c(b.net, {p0}, ConnectionOptions{ControllerKind::Lia});
    c.set_window_for_test(0, 20.0);
    c.on_loss(0);
    CHECK(c.subflow(0).cwnd == 10.0);
    c.set_window_for_test(0, 3.0);
    c.on_loss(0);
    CHECK(c.subflow(0).cwnd == kMinWindow);
}

TEST_CASE("coupled increase uses alpha across subflows") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    const int p1 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    MptcpConnection c(b.net, {p0, p1}, ConnectionOptions{ControllerKind::Lia});
    c.set_window_for_test(0, 2.0, 0.1);
    c.set_window_for_test(1, 1000.0, 0.1);
    c.on_newly_acked(0, 1);
    CHECK(c.subflow(0).cwnd == doctest::Approx(2.0 + 1000.0 / (1002.0 * 1002.0)).epsilon(1e-14));
}

TEST_CASE("disabled inner loop holds windows") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    ConnectionOptions o{ControllerKind::Hybrid};
    o.inner_loop = false;
    MptcpConnection c(b.net, {p0}, o);
    c.set_window_for_test(0, 10.0);
    c.on_newly_acked(0, 5);
    c.on_loss(0);
    CHECK(c.subflow(0).cwnd == 10.0);
}

TEST_CASE("enforcement clamps and identity is a no-op") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    const int p1 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    MptcpConnection c(b.net, {p0, p1}, ConnectionOptions{ControllerKind::Hybrid});
    c.set_window_for_test(0, 5.0);
    c.set_window_for_test(1, 7.0);
    const auto w = c.windows();
    const auto h = compute_schedule(w, c.rtts());
    c.apply_enforcement(w, h);
    CHECK(c.windows() == w);
    CHECK(c.schedule() == h);
    CHECK(c.enforcement_active());

    const std::vector<double> wild{0.5, 1e9};
    c.apply_enforcement(wild, h);
    CHECK(c.subflow(0).cwnd == kMinWindow);
    CHECK(c.subflow(1).cwnd == doctest::Approx(c.window_cap(1)));
    CHECK(c.subflow(1).cwnd < 1e9);

    const std::vector<double> short_w{5.0};
    CHECK_THROWS_AS(c.apply_enforcement(short_w, h), std::invalid_argument);

    MptcpConnection lia(b.net, {p0}, ConnectionOptions{ControllerKind::Lia});
    const std::vector<double> one{4.0};
    CHECK_THROWS_AS(lia.apply_enforcement(one, Schedule::uniform(1)), std::invalid_argument);
}

TEST_CASE("connection rejects bad path sets") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    const int p1 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 100});
    CHECK_THROWS_AS(MptcpConnection(b.net, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(MptcpConnection(b.net, {p0, p0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(MptcpConnection(b.net, {p0, p1}, ConnectionOptions{ControllerKind::SinglePathCubic}),
                    std::invalid_argument);
}

TEST_CASE("a burst loss within one window is repaired without a long stall") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.05, 0.0, 20});
    MptcpConnection c(b.net, {p0}, ConnectionOptions{ControllerKind::Lia});
    c.set_window_for_test(0, 300.0, 0.1);
    double done_at = -1;
    c.start_transfer(1'500'000, [&](double t) { done_at = t; });
    b.sim.run_until(60.0);
    REQUIRE(done_at > 0.0);
    CHECK(c.subflow(0).bytes_acked == 1'500'000);
    // Roughly 200 packets are dropped from the first window; one repair per round trip would take 20 s.
    CHECK(done_at < 10.0);
    CHECK(c.subflow(0).timeouts >= 1);
    CHECK(c.subflow(0).retransmissions >= 150);
}
