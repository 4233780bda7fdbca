#include "hmptcp/exp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hmptcp/agent/observation.hpp"
#include "hmptcp/del/metrics.hpp"
#include "hmptcp/sim/network.hpp"
#include "hmptcp/sim/random.hpp"
#include "hmptcp/sim/simulator.hpp"
#include "hmptcp/transport/connection.hpp"

namespace hmptcp::exp {

agent::AcrConfig acr_config(const AgentSpec& spec) {
    agent::AcrConfig cfg;
    cfg.batch = spec.batch;
    return cfg;
}

std::shared_ptr<agent::AcrNetworks> make_networks(const Scenario& s, Controller c) {
    const std::string label = c == Controller::Hybrid ? "acr/hybrid" : "acr/drl";
    auto nets = std::make_shared<agent::AcrNetworks>(acr_config(s.agent), sim::derive_seed(s.seed, label));
    const auto& file = c == Controller::Hybrid ? s.agent.hybrid_checkpoint : s.agent.drl_checkpoint;
    if (file) nets->load(*file);
    return nets;
}

namespace {

transport::ConnectionOptions connection_options(Controller c) {
    transport::ConnectionOptions o;
    switch (c) {
        case Controller::Lia: o.controller = transport::ControllerKind::Lia; break;
        case Controller::Hybrid: o.controller = transport::ControllerKind::Hybrid; break;
        case Controller::DrlOnly:
            o.controller = transport::ControllerKind::Hybrid;
            o.inner_loop = false;
            break;
        case Controller::Cubic: o.controller = transport::ControllerKind::SinglePathCubic; break;
    }
    return o;
}

agent::AgentOptions agent_options(const Scenario& s, Controller c) {
    agent::AgentOptions o;
    o.mode = s.agent.mode;
    o.slot = s.agent.slot_s;
    o.kappa = s.agent.kappa;
    o.acr = acr_config(s.agent);
    o.act_every_slot = c == Controller::DrlOnly || !s.agent.trigger;
    o.rate_trigger = s.agent.rate_trigger;
    o.schedule_trigger = s.agent.schedule_trigger;
    return o;
}

std::string controller_label(const Scenario& s) {
    if (s.workers.empty()) return "none";
    const Controller c = s.workers.front().controller;
    for (const auto& w : s.workers) {
        if (w.controller != c) return "mixed";
    }
    return std::string(to_string(c));
}

void append_series(std::vector<SeriesRow>& out, double now, const transport::MptcpConnection& conn,
                   const std::vector<transport::SubflowSlotStats>& slot) {
    for (std::size_t i = 0; i < slot.size(); ++i) {
        out.push_back(SeriesRow{now, conn.flow_id(), static_cast<int>(i), slot[i].delivered_pps, slot[i].cwnd,
                                slot[i].srtt});
    }
}

double delivered(const std::vector<transport::SubflowSlotStats>& slot) {
    double sum = 0.0;
    for (const auto& s : slot) sum += s.delivered_pps;
    return sum;
}

struct Competitor {
    std::unique_ptr<transport::MptcpConnection> conn;
    CompetitorSpec spec;
};

void start_competitor(sim::Simulator& sim, Competitor& c) {
    if (c.spec.bytes == 0) {
        c.conn->start_transfer(std::int64_t{1} << 50);
        return;
    }
    c.conn->start_transfer(c.spec.bytes, [&sim, &c](double now) {
        sim.schedule(now + c.spec.gap_s, [&sim, &c] { start_competitor(sim, c); });
    });
}

}  // namespace

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
    validate(s);
    sim::Simulator sim;
    sim::Network net(sim, s.seed, options.log);
    for (const auto& p : s.paths) net.add_path(p.to_config(s.duration_s));

    // Agents.
    std::unique_ptr<agent::DrlAgent> own_hybrid, own_drl;
    agent::DrlAgent* hybrid = options.hybrid_agent;
    agent::DrlAgent* drl = options.drl_agent;
    const bool need_hybrid = std::any_of(s.workers.begin(), s.workers.end(),
                                         [](const WorkerSpec& w) { return w.controller == Controller::Hybrid; });
    const bool need_drl = std::any_of(s.workers.begin(), s.workers.end(),
                                      [](const WorkerSpec& w) { return w.controller == Controller::DrlOnly; });
    if (need_hybrid && !hybrid) {
        auto nets = options.hybrid_networks ? options.hybrid_networks : make_networks(s, Controller::Hybrid);
        own_hybrid = std::make_unique<agent::DrlAgent>(agent_options(s, Controller::Hybrid),
                                                       sim::derive_seed(s.seed, "agent/hybrid"), nets);
        hybrid = own_hybrid.get();
    }
    if (need_drl && !drl) {
        auto nets = options.drl_networks ? options.drl_networks : make_networks(s, Controller::DrlOnly);
        own_drl = std::make_unique<agent::DrlAgent>(agent_options(s, Controller::DrlOnly),
                                                    sim::derive_seed(s.seed, "agent/drl"), nets);
        drl = own_drl.get();
    }
    if (hybrid) hybrid->reset_connections();
    if (drl) drl->reset_connections();
    const auto hybrid_before = hybrid ? hybrid->counters() : agent::AgentCounters{};
    const auto drl_before = drl ? drl->counters() : agent::AgentCounters{};

    // Workers.
    std::vector<std::unique_ptr<transport::MptcpConnection>> workers;
    del::DelWorkload workload(sim, s.scheme, sim::derive_seed(s.seed, "workload"));
    for (const auto& w : s.workers) {
        workers.push_back(std::make_unique<transport::MptcpConnection>(net, w.paths, connection_options(w.controller)));
        auto& conn = *workers.back();
        if (w.access_delay_s > 0.0 || w.access_loss > 0.0) {
            net.set_access(conn.flow_id(), {w.access_delay_s, w.access_loss});
        }
        if (w.controller == Controller::Hybrid) hybrid->attach(conn);
        if (w.controller == Controller::DrlOnly) drl->attach(conn);
        workload.add_worker(conn, del::WorkerConfig{w.model_bytes, w.compute_mean_s, w.compute_jitter});
    }

    std::vector<Competitor> competitors;
    competitors.reserve(s.competitors.size());
    for (const auto& c : s.competitors) {
        competitors.push_back(Competitor{
            std::make_unique<transport::MptcpConnection>(net, std::vector<int>{c.path},
                                                         connection_options(Controller::Cubic)),
            c});
    }

    RunResult out;
    RunMetrics& m = out.metrics;
    m.scheme = del::to_string(s.scheme);
    m.controller = controller_label(s);
    m.seed = s.seed;
    m.worker_rates.resize(workers.size());

    if (!workers.empty()) workload.start();
    for (auto& c : competitors) start_competitor(sim, c);

    const double slot = s.agent.slot_s;
    const auto slots = static_cast<std::int64_t>(std::floor(s.duration_s / slot + 1e-9));
    bool keep_going = true;
    double now = 0.0;
    for (std::int64_t k = 1; k <= slots && keep_going; ++k) {
        now = static_cast<double>(k) * slot;
        sim.run_until(now);
        for (std::size_t u = 0; u < workers.size(); ++u) {
            auto& conn = *workers[u];
            const Controller c = s.workers[u].controller;
            std::vector<transport::SubflowSlotStats> stats;
            if (uses_agent(c)) {
                auto tick = (c == Controller::Hybrid ? hybrid : drl)->tick(conn, now);
                stats = std::move(tick.slot);
                if (options.on_tick && !options.on_tick(tick)) keep_going = false;
            } else {
                stats = conn.close_slot(now, slot);
                conn.refresh_schedule();
            }
            m.worker_rates[u].push_back(delivered(stats));
            if (s.timeseries) append_series(out.series, now, conn, stats);
        }
        for (auto& c : competitors) {
            const auto stats = c.conn->close_slot(now, slot);
            if (s.timeseries) append_series(out.series, now, *c.conn, stats);
        }
        workload.sample_unfairness();
    }
    out.end_time = now;

    if (!workers.empty()) {
        m.iterations = workload.iterations();
        m.mean_iteration_time_s = workload.mean_iteration_time(now);
        m.mean_active_time_s = workload.mean_active_time(now);
        m.unfairness_iters = workload.mean_unfairness();
        m.straggler = workload.straggler(now);
        double fluct = 0.0;
        std::vector<double> means;
        for (const auto& series : m.worker_rates) {
            if (series.size() >= 2) fluct += del::throughput_fluctuation(series);
            double sum = 0.0;
            for (double x : series) sum += x;
            means.push_back(std::max(series.empty() ? 0.0 : sum / static_cast<double>(series.size()), agent::kRateFloor));
        }
        m.mean_fluct_pps = fluct / static_cast<double>(workers.size());
        m.straggler_mean_tput_pps = means[m.straggler];
        m.aggregate_utility = del::aggregate_utility(means);
    }
    auto diff = [](const agent::AgentCounters& a, const agent::AgentCounters& b) {
        agent::AgentCounters d;
        d.ticks = a.ticks - b.ticks;
        d.decisions = a.decisions - b.decisions;
        d.idle_skips = a.idle_skips - b.idle_skips;
        d.transitions = a.transitions - b.transitions;
        d.train_steps = a.train_steps - b.train_steps;
        d.macs = a.macs - b.macs;
        d.compute_seconds = a.compute_seconds - b.compute_seconds;
        return d;
    };
    if (hybrid) m.hybrid_agent = diff(hybrid->counters(), hybrid_before);
    if (drl) m.drl_agent = diff(drl->counters(), drl_before);
    return out;
}

}  // namespace hmptcp::exp
