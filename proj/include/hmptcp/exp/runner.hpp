#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hmptcp/agent/daemon.hpp"
#include "hmptcp/exp/scenario.hpp"
#include "hmptcp/sim/packet.hpp"

namespace hmptcp::exp {

struct SeriesRow {
    double t = 0.0;
    int flow_id = 0;
    int subflow_id = 0;
    double rate_pps = 0.0;
    double cwnd_pkts = 0.0;
    double rtt_s = 0.0;
};

struct RunMetrics {
    std::string scheme;
    std::string controller;
    std::uint64_t seed = 0;
    double mean_iteration_time_s = 0.0;
    double mean_active_time_s = 0.0;
    /// Time average of the spread of iteration counts, sampled every slot.
    double unfairness_iters = 0.0;
    /// Mean over workers of the mean absolute slot-to-slot change of their delivered rate.
    double mean_fluct_pps = 0.0;
    std::size_t straggler = 0;
    double straggler_mean_tput_pps = 0.0;
    /// Sum over workers of ln(mean delivered rate in packets/s).
    double aggregate_utility = 0.0;
    std::vector<int> iterations;
    /// Per worker, delivered packets/s in every slot.
    std::vector<std::vector<double>> worker_rates;
    agent::AgentCounters hybrid_agent;
    agent::AgentCounters drl_agent;
};

struct RunOptions {
    /// Agents to use instead of building them from the scenario. They are
    /// reset for the new connections; replay and networks persist.
    agent::DrlAgent* hybrid_agent = nullptr;
    agent::DrlAgent* drl_agent = nullptr;
    /// Loaded into freshly built agents when no agent is given.
    std::shared_ptr<agent::AcrNetworks> hybrid_networks;
    std::shared_ptr<agent::AcrNetworks> drl_networks;
    sim::PacketLog* log = nullptr;
    /// Sees every agent tick; returning false ends the run after the current slot.
    std::function<bool(const agent::TickResult&)> on_tick;
};

struct RunResult {
    RunMetrics metrics;
    std::vector<SeriesRow> series;
    /// Simulated time actually covered (shorter if on_tick stopped the run).
    double end_time = 0.0;
};

agent::AcrConfig acr_config(const AgentSpec& spec);

/// Networks for one agent-controlled controller: the checkpoint when given,
/// otherwise a fresh seed-derived initialisation.
std::shared_ptr<agent::AcrNetworks> make_networks(const Scenario& s, Controller c);

/// Runs the whole scenario on one simulated clock. Throws ConfigError for an
/// invalid scenario and std::runtime_error when a checkpoint cannot be loaded.
RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

}  // namespace hmptcp::exp
