#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hmptcp/agent/acr.hpp"
#include "hmptcp/agent/daemon.hpp"
#include "hmptcp/agent/noise.hpp"
#include "hmptcp/agent/observation.hpp"
#include "hmptcp/agent/replay.hpp"
#include "hmptcp/sim/network.hpp"

using namespace hmptcp;
using namespace hmptcp::agent;

namespace {

struct Bed {
    sim::Simulator sim;
    sim::Network net{sim, 5};
};

SubflowObservation sample_obs(double rate, double rtt) {
    SubflowObservation o;
    o.sending_rate = rate;
    o.throughput = rate;
    o.rtt = rtt;
    o.schedule_share = 1.0;
    return o;
}

void tick_every(sim::Simulator& sim, double slot, std::function<void(double)> fn) {
    auto step = std::make_shared<std::function<void()>>();
    *step = [&sim, slot, fn, step] {
        fn(sim.now());
        sim.schedule_in(slot, *step);
    };
    sim.schedule(slot, *step);
}

}  // namespace

TEST_CASE("ou noise examples") {
    OuParams quiet;
    quiet.sigma = 0.0;
    OuNoise n(1, sim::RandomStream(1), quiet);
    n.set_state({1.0});
    CHECK(n.step()[0] == doctest::Approx(0.85).epsilon(1e-15));
    n.set_state({0.0});
    CHECK(n.step()[0] == 0.0);

    OuParams p;
    OuNoise noisy(1, sim::RandomStream(2), p);
    const int steps = 100'000;
    double sum = 0, sq = 0;
    for (int i = 0; i < steps; ++i) {
        const double x = noisy.step()[0];
        sum += x;
        sq += x * x;
    }
    const double mean = sum / steps;
    const double sd = std::sqrt(sq / steps - mean * mean);
    const double oracle = p.sigma / std::sqrt(2.0 * p.theta);
    CHECK(std::abs(sd - oracle) <= 0.1 * oracle);
}

TEST_CASE("reward examples and scaling") {
    CHECK(compute_reward(std::vector<double>{1.0, 1.0}) == 0.0);
    CHECK(compute_reward(std::vector<double>{std::exp(1.0), std::exp(1.0)}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(compute_reward(std::vector<double>{2.0, 4.0}) == doctest::Approx(std::log(8.0)).epsilon(1e-15));
    CHECK(std::isfinite(compute_reward(std::vector<double>{0.0})));

    sim::RandomStream gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(1 + gen.index(4));
        for (auto& x : r) x = gen.uniform(1.0, 2e4);
        const double c = gen.uniform(1.01, 10.0);
        std::vector<double> scaled(r);
        for (auto& x : scaled) x *= c;
        double oracle = 0;
        for (double x : r) oracle += std::log(x);
        REQUIRE(std::abs(compute_reward(r) - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
        REQUIRE(compute_reward(scaled) - compute_reward(r) ==
                doctest::Approx(static_cast<double>(r.size()) * std::log(c)).epsilon(1e-12));
    }
}

TEST_CASE("enforce action examples") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.02, 0.0, 100});
    const int p1 = b.net.add_path({sim::CapacityTrace(10e6), 0.02, 0.0, 100});
    transport::ConnectionOptions o{transport::ControllerKind::Hybrid};
    o.bdp_cap_factor = 1e6;
    transport::MptcpConnection c(b.net, {p0, p1}, o);
    c.set_window_for_test(0, 16.0, 0.05);
    c.set_window_for_test(1, 16.0, 0.05);

    const std::vector<double> a{-1.0, 1.0};
    const auto e = enforce_action(c, a, 1.0);
    CHECK(e.windows == std::vector<double>{8.0, 32.0});
    CHECK(e.schedule[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(e.schedule[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(c.windows() == e.windows);

    c.set_window_for_test(0, 10.0);
    const std::vector<double> up{1.0, 0.0};
    CHECK(enforce_action(c, up).windows[0] == 20.0);

    const auto before = c.windows();
    const std::vector<double> zero{0.0, 0.0};
    const auto id = enforce_action(c, zero);
    CHECK(id.windows == before);
    CHECK(id.schedule == transport::compute_schedule(before, c.rtts()));

    const std::vector<double> wrong{0.0};
    CHECK_THROWS_AS(enforce_action(c, wrong), std::invalid_argument);
}

TEST_CASE("exploration clips to the action range") {
    CHECK(std::clamp(0.95 + 0.3, -1.0, 1.0) == 1.0);

    AgentOptions opt;
    opt.mode = AgentMode::Train;
    opt.noise.sigma = 0.0;
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(10e6), 0.02, 0.0, 100});
    transport::MptcpConnection c(b.net, {p0}, transport::ConnectionOptions{transport::ControllerKind::Hybrid});
    c.start_transfer(1'000'000'000);
    DrlAgent agent(opt, 11);
    b.sim.run_until(0.1);
    const auto r = agent.tick(c, 0.1);
    REQUIRE(r.acted);
    for (double x : r.action) {
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("greedy policy is deterministic and order sensitive") {
    AcrNetworks nets({}, 4);
    const Observation one{sample_obs(800, 0.05)};
    const Observation two{sample_obs(800, 0.05), sample_obs(300, 0.12)};
    const Observation swapped{two[1], two[0]};
    const Observation dup{one[0], one[0]};
    CHECK(nets.greedy_action(nets.final_state(two)) == nets.greedy_action(nets.final_state(two)));
    CHECK(nets.final_state(two) != nets.final_state(swapped));
    CHECK(nets.final_state(one) != nets.final_state(dup));
    CHECK_THROWS(nets.final_state(Observation{}));
}

TEST_CASE("replay sampling is uniform") {
    ReplayBuffer rb(100);
    for (int i = 0; i < 150; ++i) rb.push(Transition{{}, {static_cast<double>(i)}, 0.0, {}});
    CHECK(rb.size() == 100);
    CHECK(rb.at(0).action[0] == 50.0);
    CHECK(rb.at(99).action[0] == 149.0);

    sim::RandomStream rng(8);
    const std::size_t k = 32;
    const int draws = 100'000 / static_cast<int>(k);
    std::vector<double> hits(rb.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
        auto idx = rb.sample_indices(k, rng);
        std::sort(idx.begin(), idx.end());
        REQUIRE(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        for (auto i : idx) hits[i] += 1.0;
    }
    // Each slot is included with probability k/n per draw.
    const double p = static_cast<double>(k) / rb.size();
    const double expect = draws * p;
    const double sigma = std::sqrt(draws * p * (1 - p));
    double chi2 = 0;
    for (double h : hits) chi2 += (h - expect) * (h - expect) / (sigma * sigma);
    const double df = static_cast<double>(rb.size());
    CHECK(chi2 < df + 3.0 * std::sqrt(2.0 * df));
    CHECK(*std::max_element(hits.begin(), hits.end()) < expect + 4.5 * sigma);
    CHECK(*std::min_element(hits.begin(), hits.end()) > expect - 4.5 * sigma);
    CHECK_THROWS_AS(rb.sample_indices(101, rng), std::invalid_argument);
}

TEST_CASE("soft update shrinks the target gap geometrically") {
    AcrNetworks nets({}, 6);
    auto online = nets.online_parameters();
    auto target = nets.target_parameters();
    REQUIRE(online.size() == target.size());
    for (auto* t : target)
        for (auto& v : t->value.values()) v += 1.0;

    nets.soft_update();
    for (std::size_t p = 0; p < online.size(); ++p) {
        const auto& o = online[p]->value.values();
        const auto& t = target[p]->value.values();
        for (std::size_t i = 0; i < o.size(); ++i) REQUIRE(t[i] - o[i] == doctest::Approx(0.995).epsilon(1e-12));
    }
    for (int k = 1; k < 460; ++k) nets.soft_update();
    const double oracle = std::pow(0.995, 460);
    CHECK(oracle == doctest::Approx(0.0997).epsilon(1e-3));
    double worst = 0;
    for (std::size_t p = 0; p < online.size(); ++p) {
        const auto& o = online[p]->value.values();
        const auto& t = target[p]->value.values();
        for (std::size_t i = 0; i < o.size(); ++i) worst = std::max(worst, std::abs((t[i] - o[i]) - oracle) / oracle);
    }
    CHECK(worst <= 1e-9);

    nets.sync_targets();
    nets.soft_update();
    for (std::size_t p = 0; p < online.size(); ++p) CHECK(target[p]->value == online[p]->value);
}

TEST_CASE("zero td error leaves the critic unchanged") {
    AcrConfig cfg;
    cfg.gamma = 0.0;
    cfg.batch = 4;
    AcrNetworks nets(cfg, 12);
    const Observation s{sample_obs(500, 0.04)};
    const std::vector<double> a{0.3, 0.0};
    const double q = nets.q_value(nets.final_state(s), a);
    ReplayBuffer rb;
    for (int i = 0; i < 4; ++i) rb.push(Transition{s, a, q, s});
    const nn::Matrix before = nets.critic.layers().back().weight.value;
    sim::RandomStream rng(1);
    const auto stats = nets.train_step(rb, rng);
    CHECK(stats.critic_loss == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(nets.critic.layers().back().weight.value == before);
}

TEST_CASE("bandit converges to the rewarding action") {
    AcrConfig cfg;
    cfg.gamma = 0.0;
    cfg.action_dim = 1;
    AcrNetworks nets(cfg, 21);
    OuNoise noise(1, sim::RandomStream(21, "bandit"));
    sim::RandomStream rng(22);
    ReplayBuffer rb;
    const Observation s{sample_obs(1000, 0.05)};
    int steps = 0;
    while (steps < 2000) {
        const double greedy = nets.greedy_action(nets.final_state(s))[0];
        const double a = std::clamp(greedy + noise.step()[0], -1.0, 1.0);
        rb.push(Transition{s, {a}, -(a - 0.5) * (a - 0.5), s});
        if (rb.size() < cfg.batch) continue;
        nets.train_step(rb, rng);
        nets.soft_update();
        ++steps;
    }
    const double final_action = nets.greedy_action(nets.final_state(s))[0];
    MESSAGE("bandit greedy action ", final_action);
    CHECK(std::abs(final_action - 0.5) <= 0.1);
}

TEST_CASE("daemon ticks store one transition per slot after the first") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(8e6), 0.02, 0.0, 100});
    const int p1 = b.net.add_path({sim::CapacityTrace(4e6), 0.04, 0.0, 100});
    transport::MptcpConnection c(b.net, {p0, p1}, transport::ConnectionOptions{transport::ControllerKind::Hybrid});
    c.start_transfer(1'000'000'000);
    AgentOptions opt;
    opt.mode = AgentMode::Train;
    DrlAgent agent(opt, 3);
    std::vector<TickResult> results;
    tick_every(b.sim, opt.slot, [&](double now) { results.push_back(agent.tick(c, now)); });

    b.sim.run_until(0.15);
    REQUIRE(results.size() == 1);
    CHECK_FALSE(results[0].stored);
    CHECK(agent.replay().size() == 0);
    b.sim.run_until(0.25);
    CHECK(agent.replay().size() == 1);

    b.sim.run_until(4.05);
    const auto& n = agent.counters();
    CHECK(n.ticks == 40);
    CHECK(n.decisions == 40);
    CHECK(n.transitions == 39);
    CHECK(n.train_steps == 39 - 31);
    CHECK(agent.replay().at(0).action.size() == 2);
}

TEST_CASE("idle connections are skipped and forget their previous state") {
    Bed b;
    const int p0 = b.net.add_path({sim::CapacityTrace(8e6), 0.02, 0.0, 100});
    transport::MptcpConnection c(b.net, {p0}, transport::ConnectionOptions{transport::ControllerKind::Hybrid});
    AgentOptions opt;
    opt.mode = AgentMode::Train;
    DrlAgent agent(opt, 3);
    c.start_transfer(15'000);
    tick_every(b.sim, opt.slot, [&](double now) { agent.tick(c, now); });
    b.sim.run_until(2.05);
    CHECK(agent.counters().idle_skips > 0);
    const auto stored = agent.replay().size();
    c.start_transfer(15'000);
    b.sim.run_until(2.15);
    CHECK(agent.replay().size() == stored);
}

TEST_CASE("agent mode names") {
    for (auto m : {AgentMode::Train, AgentMode::Infer, AgentMode::Null}) CHECK(parse_agent_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_agent_mode("explore"), std::invalid_argument);
}
