#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "hmptcp/sim/capacity_trace.hpp"
#include "hmptcp/sim/network.hpp"
#include "hmptcp/sim/path.hpp"
#include "hmptcp/sim/random.hpp"
#include "hmptcp/sim/simulator.hpp"

using namespace hmptcp::sim;

TEST_CASE("events pop in time order with insertion order breaking ties") {
    Simulator sim;
    std::vector<int> order;
    sim.schedule(2.0, [&] { order.push_back(3); });
    sim.schedule(1.0, [&] { order.push_back(1); });
    sim.schedule(1.0, [&] { order.push_back(2); });
    sim.run_until(5.0);
    CHECK(order == std::vector<int>{1, 2, 3});
    CHECK(sim.now() == 5.0);
    CHECK_THROWS_AS(sim.schedule(4.0, [] {}), std::logic_error);
}

TEST_CASE("run_until leaves later events pending") {
    Simulator sim;
    int fired = 0;
    sim.schedule(1.0, [&] { ++fired; });
    sim.schedule(3.0, [&] { ++fired; });
    sim.run_until(2.0);
    CHECK(fired == 1);
    CHECK(sim.pending() == 1);
}

TEST_CASE("derived seeds differ per label and are stable") {
    CHECK(derive_seed(7, "a") == derive_seed(7, "a"));
    CHECK(derive_seed(7, "a") != derive_seed(7, "b"));
    CHECK(derive_seed(7, "a") != derive_seed(8, "a"));
    RandomStream r(3);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(r.index(7) < 7);
    }
}

TEST_CASE("capacity trace lookup and parsing") {
    CapacityTrace t({{0.0, 8e6}, {10.0, 4e6}, {20.0, 16e6}});
    CHECK(t.at(0.0) == 8e6);
    CHECK(t.at(9.999) == 8e6);
    CHECK(t.at(10.0) == 4e6);
    CHECK(t.at(100.0) == 16e6);
    CHECK_THROWS_AS(CapacityTrace({{1.0, 8e6}}), std::invalid_argument);
    CHECK_THROWS_AS(CapacityTrace({{0.0, 8e6}, {0.0, 4e6}}), std::invalid_argument);
    CHECK_THROWS_AS(CapacityTrace({{0.0, 0.0}}), std::invalid_argument);

    std::istringstream in("# capacity\ntime_s,capacity_mbps\n0,20\n\n30,50\n");
    const auto parsed = parse_capacity_trace(in);
    REQUIRE(parsed.points().size() == 2);
    CHECK(parsed.at(31.0) == 50e6);
    std::istringstream bad("0,20\n5,abc\n");
    CHECK_THROWS_AS(parse_capacity_trace(bad), std::invalid_argument);

    const auto sq = CapacityTrace::square_wave(16e6, 4e6, 20.0, 100.0);
    CHECK(sq.at(5.0) == 16e6);
    CHECK(sq.at(25.0) == 4e6);
    CHECK(sq.at(45.0) == 16e6);
}

TEST_CASE("a single packet on an idle 8 Mbps path arrives after serialisation plus propagation") {
    Simulator sim;
    std::vector<double> arrivals;
    Path path(sim, 0, PathConfig{CapacityTrace(8e6), 0.05, 0.0, 10}, 1,
              [&](const Packet&) { arrivals.push_back(sim.now()); });
    Packet p;
    p.size = 1500;
    CHECK(path.enqueue(p) == EnqueueResult::Enqueued);
    CHECK(path.busy_until() == doctest::Approx(0.0015).epsilon(1e-12));
    sim.run_until(1.0);
    REQUIRE(arrivals.size() == 1);
    CHECK(arrivals[0] == doctest::Approx(0.0515).epsilon(1e-12));
}

TEST_CASE("drop-tail counts the packet in service") {
    Simulator sim;
    Path path(sim, 0, PathConfig{CapacityTrace(1e6), 0.0, 0.0, 3}, 1, [](const Packet&) {});
    Packet p;
    int enq = 0, full = 0;
    for (int i = 0; i < 10; ++i) {
        const auto r = path.enqueue(p);
        enq += r == EnqueueResult::Enqueued;
        full += r == EnqueueResult::DroppedQueueFull;
    }
    CHECK(enq == 3);
    CHECK(full == 7);
    CHECK(path.counters().max_occupancy == 3);
}

TEST_CASE("service time uses the capacity at transmission start") {
    Simulator sim;
    std::vector<double> arrivals;
    Path path(sim, 0, PathConfig{CapacityTrace({{0.0, 12e6}, {0.0005, 1.2e6}}), 0.0, 0.0, 10}, 1,
              [&](const Packet&) { arrivals.push_back(sim.now()); });
    Packet p;
    path.enqueue(p);  // starts at 0 at 12 Mbps: 1 ms
    path.enqueue(p);  // starts at 1 ms at 1.2 Mbps: 10 ms
    sim.run_until(1.0);
    REQUIRE(arrivals.size() == 2);
    CHECK(arrivals[0] == doctest::Approx(0.001));
    CHECK(arrivals[1] == doctest::Approx(0.011));
}

// Property: for random loss probabilities, the observed wire-loss fraction over
// 1e5 offered packets stays within three standard deviations.
TEST_CASE("random loss fraction matches its probability") {
    RandomStream gen(99);
    for (int trial = 0; trial < 5; ++trial) {
        const double p = gen.uniform(0.001, 0.2);
        Simulator sim;
        Path path(sim, 0, PathConfig{CapacityTrace(1e12), 0.0, p, 1000000}, gen.index(1u << 30),
                  [](const Packet&) {});
        const int n = 100000;
        Packet pkt;
        for (int i = 0; i < n; ++i) path.enqueue(pkt);
        const double frac = static_cast<double>(path.counters().dropped_loss) / n;
        const double sigma = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(frac - p) <= 3 * sigma);
    }
}

// Property: every offered packet is delivered, dropped at the queue, lost on
// the wire or still queued.
TEST_CASE("path conserves packets") {
    RandomStream gen(5);
    for (int trial = 0; trial < 10; ++trial) {
        Simulator sim;
        const double loss = gen.uniform(0.0, 0.1);
        const int limit = 1 + static_cast<int>(gen.index(50));
        Path path(sim, 0, PathConfig{CapacityTrace(gen.uniform(1e6, 1e8)), 0.01, loss, limit}, trial,
                  [](const Packet&) {});
        double t = 0.0;
        for (int i = 0; i < 5000; ++i) {
            t += gen.uniform(0.0, 0.0005);
            sim.schedule(t, [&path] { path.enqueue(Packet{}); });
        }
        sim.run_until(t * 0.7);
        const auto& c = path.counters();
        const std::uint64_t in_system = path.occupancy();
        // Packets in propagation are neither queued nor delivered yet.
        CHECK(c.offered == c.dropped_loss + c.dropped_full + c.enqueued);
        CHECK(c.enqueued >= c.delivered + in_system);
        sim.run_until(t + 100.0);
        CHECK(c.enqueued == c.delivered);
    }
}

TEST_CASE("a saturating sender gets the path capacity") {
    Simulator sim;
    Network net(sim, 1);
    const int pid = net.add_path(PathConfig{CapacityTrace(20e6), 0.01, 0.0, 50});
    net.register_flow({}, {});
    // Keep the queue non-empty by offering a packet every 0.5 ms (24 Mbps > 20 Mbps).
    for (int i = 0; i < 20000; ++i) sim.schedule(i * 0.0005, [&] { net.send_data(pid, Packet{}); });
    sim.run_until(10.0);
    const double tput = net.path(pid).counters().delivered_bytes * 8.0 / 10.0;
    CHECK(std::abs(tput - 20e6) / 20e6 < 0.05);
}

TEST_CASE("path simulation is deterministic") {
    auto run = [](std::uint64_t seed) {
        Simulator sim;
        PacketLog log;
        Network net(sim, seed, &log);
        const int pid = net.add_path(PathConfig{CapacityTrace(5e6), 0.02, 0.05, 20});
        net.register_flow({}, {});
        for (int i = 0; i < 3000; ++i) sim.schedule(i * 0.001, [&, i] {
            Packet p;
            p.seq = i;
            net.send_data(pid, p);
        });
        sim.run_until(10.0);
        return log.hash();
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12));
}

TEST_CASE("access impairment adds return delay and loss per flow") {
    Simulator sim;
    Network net(sim, 4);
    const int p = net.add_path({CapacityTrace(8e6), 0.05, 0.0, 1000});
    double ack_at = -1;
    int delivered = 0;
    const int f = net.register_flow([&](const Packet&) { ++delivered; }, [&](const Packet&) { ack_at = sim.now(); });
    net.set_access(f, {0.02, 0.0});
    Packet pkt;
    pkt.flow_id = f;
    pkt.size = 1000;
    net.send_data(p, pkt);
    sim.run_until(0.2);
    net.send_ack(p, pkt);
    sim.run_until(1.0);
    CHECK(delivered == 1);
    CHECK(ack_at == doctest::Approx(0.2 + 0.07).epsilon(1e-12));

    net.set_access(f, {0.0, 0.25});
    int dropped = 0;
    const int n = 40'000;
    for (int i = 0; i < n; ++i) dropped += net.send_data(p, pkt) == EnqueueResult::DroppedRandomLoss;
    const double sd = std::sqrt(n * 0.25 * 0.75);
    CHECK(std::abs(dropped - n * 0.25) < 3 * sd);
    CHECK_THROWS_AS(net.set_access(f, {-1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(net.set_access(f, {0.0, 1.0}), std::invalid_argument);
}
