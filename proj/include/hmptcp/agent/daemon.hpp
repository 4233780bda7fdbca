#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hmptcp/agent/acr.hpp"
#include "hmptcp/agent/noise.hpp"
#include "hmptcp/agent/observation.hpp"
#include "hmptcp/agent/replay.hpp"
#include "hmptcp/transport/connection.hpp"

namespace hmptcp::agent {

enum class AgentMode {
    Train,  // explore with OU noise, store transitions, train every slot
    Infer,  // greedy policy, no learning
    Null,   // a = 0 every slot
};

std::string_view to_string(AgentMode mode);
/// Throws std::invalid_argument on an unknown name.
AgentMode parse_agent_mode(std::string_view name);

struct Enforcement {
    std::vector<double> windows;
    transport::Schedule schedule;
};

/// w_i = clamp(w'_i * 2^(a_i * kappa), min window, window cap), h = compute_schedule(w, srtt),
/// then applied to the connection. Throws std::invalid_argument unless the
/// action has one entry per subflow.
Enforcement enforce_action(transport::MptcpConnection& conn, std::span<const double> action, double kappa = 1.0);

struct AgentOptions {
    AgentMode mode = AgentMode::Infer;
    double slot = 0.1;
    double kappa = 1.0;
    AcrConfig acr;
    OuParams noise;
    /// In Infer mode the agent otherwise only acts when the connection's
    /// delivered rate or schedule moved since its last action.
    bool act_every_slot = false;
    /// Relative change of the connection's delivered rate that triggers an action.
    double rate_trigger = 0.1;
    /// L1 distance between schedules that triggers an action.
    double schedule_trigger = 0.1;
};

struct TickResult {
    /// The slot measurements the decision was based on.
    std::vector<transport::SubflowSlotStats> slot;
    bool skipped_idle = false;
    bool acted = false;
    double reward = 0.0;
    bool stored = false;
    std::optional<TrainStats> train;
    std::vector<double> action;
};

struct AgentCounters {
    std::uint64_t ticks = 0;
    std::uint64_t decisions = 0;
    std::uint64_t idle_skips = 0;
    std::uint64_t transitions = 0;
    std::uint64_t train_steps = 0;
    std::uint64_t macs = 0;
    double compute_seconds = 0.0;
};

/// The outer control loop. One agent may serve several connections; each gets
/// its own exploration noise and previous-state memory.
class DrlAgent {
public:
    /// Creates fresh networks unless `networks` is given.
    DrlAgent(AgentOptions options, std::uint64_t seed, std::shared_ptr<AcrNetworks> networks = nullptr);

    /// Throws std::invalid_argument if the connection has more subflows than the actor outputs.
    void attach(const transport::MptcpConnection& conn);

    /// One decision slot: observe, compute the final state, act, enforce,
    /// store the previous transition, then train and soft-update when training.
    /// A connection with nothing to send that sent nothing during the slot is
    /// skipped and its previous state forgotten.
    TickResult tick(transport::MptcpConnection& conn, double now);

    /// Forgets every connection (flow ids may be reused by a new simulation).
    /// Replay contents and networks are kept; exploration noise restarts from
    /// a fresh stream.
    void reset_connections();

    AcrNetworks& networks() { return *nets_; }
    std::shared_ptr<AcrNetworks> shared_networks() { return nets_; }
    ReplayBuffer& replay() { return replay_; }
    const AgentOptions& options() const { return opt_; }
    const AgentCounters& counters() const { return counters_; }
    void set_mode(AgentMode mode) { opt_.mode = mode; }

private:
    struct Context {
        explicit Context(OuNoise n) : noise(std::move(n)) {}
        OuNoise noise;
        bool have_prev = false;
        Observation prev_state;
        std::vector<double> prev_action;
        bool has_acted = false;
        double acted_rate = 0.0;
        std::vector<double> acted_schedule;
    };

    Context& context(const transport::MptcpConnection& conn);
    bool triggered(const Context& ctx, const Observation& obs) const;

    AgentOptions opt_;
    std::uint64_t seed_;
    std::shared_ptr<AcrNetworks> nets_;
    ReplayBuffer replay_;
    sim::RandomStream sample_rng_;
    std::map<int, Context> contexts_;
    std::uint64_t epoch_ = 0;
    AgentCounters counters_;
};

}  // namespace hmptcp::agent
