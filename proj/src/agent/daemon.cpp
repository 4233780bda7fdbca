#include "hmptcp/agent/daemon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hmptcp::agent {

std::string_view to_string(AgentMode mode) {
    switch (mode) {
        case AgentMode::Train: return "train";
        case AgentMode::Infer: return "infer";
        case AgentMode::Null: return "null";
    }
    return "?";
}

AgentMode parse_agent_mode(std::string_view name) {
    if (name == "train") return AgentMode::Train;
    if (name == "infer") return AgentMode::Infer;
    if (name == "null") return AgentMode::Null;
    throw std::invalid_argument("unknown agent mode '" + std::string(name) + "'");
}

Enforcement enforce_action(transport::MptcpConnection& conn, std::span<const double> action, double kappa) {
    if (action.size() != conn.subflow_count()) {
        throw std::invalid_argument("action has " + std::to_string(action.size()) + " entries for " +
                                    std::to_string(conn.subflow_count()) + " subflows");
    }
    Enforcement e;
    e.windows.resize(action.size());
    for (std::size_t i = 0; i < action.size(); ++i) {
        const double scaled = conn.subflow(i).cwnd * std::exp2(action[i] * kappa);
        e.windows[i] = std::clamp(scaled, transport::kMinWindow, conn.window_cap(i));
    }
    e.schedule = transport::compute_schedule(e.windows, conn.rtts());
    conn.apply_enforcement(e.windows, e.schedule);
    return e;
}

DrlAgent::DrlAgent(AgentOptions options, std::uint64_t seed, std::shared_ptr<AcrNetworks> networks)
    : opt_(std::move(options)),
      seed_(seed),
      nets_(networks ? std::move(networks) : std::make_shared<AcrNetworks>(opt_.acr, seed)),
      sample_rng_(seed, "agent/replay") {
    if (!(opt_.slot > 0.0)) throw std::invalid_argument("slot length must be positive");
}

void DrlAgent::reset_connections() {
    contexts_.clear();
    ++epoch_;
}

void DrlAgent::attach(const transport::MptcpConnection& conn) { context(conn); }

DrlAgent::Context& DrlAgent::context(const transport::MptcpConnection& conn) {
    if (conn.subflow_count() > nets_->config().action_dim) {
        throw std::invalid_argument("connection has " + std::to_string(conn.subflow_count()) +
                                    " subflows but the actor serves " + std::to_string(nets_->config().action_dim));
    }
    auto it = contexts_.find(conn.flow_id());
    if (it == contexts_.end()) {
        sim::RandomStream rng(seed_, "agent/noise/" + std::to_string(epoch_) + "/" + std::to_string(conn.flow_id()));
        it = contexts_.emplace(conn.flow_id(), Context(OuNoise(nets_->config().action_dim, rng, opt_.noise))).first;
    }
    return it->second;
}

bool DrlAgent::triggered(const Context& ctx, const Observation& obs) const {
    if (opt_.mode != AgentMode::Infer || opt_.act_every_slot || !ctx.has_acted) return true;
    double rate = 0.0;
    for (const auto& o : obs) rate += o.throughput;
    if (std::abs(rate - ctx.acted_rate) > opt_.rate_trigger * std::max(ctx.acted_rate, 1.0)) return true;
    if (ctx.acted_schedule.size() != obs.size()) return true;
    double l1 = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) l1 += std::abs(obs[i].schedule_share - ctx.acted_schedule[i]);
    return l1 > opt_.schedule_trigger;
}

TickResult DrlAgent::tick(transport::MptcpConnection& conn, double now) {
    using clock = std::chrono::steady_clock;
    Context& ctx = context(conn);
    ++counters_.ticks;
    TickResult out;

    out.slot = conn.close_slot(now, opt_.slot);
    const auto& slot = out.slot;
    const Observation obs = observe(slot);
    out.reward = compute_reward(obs);

    bool sent = false;
    for (const auto& s : slot) sent = sent || s.sent_pps > 0.0;
    if (conn.idle() && !sent) {
        ++counters_.idle_skips;
        ctx.have_prev = false;
        conn.refresh_schedule();
        out.skipped_idle = true;
        return out;
    }

    const std::size_t n = conn.subflow_count();
    const std::size_t dim = nets_->config().action_dim;
    std::vector<double> action(dim, 0.0);
    if (opt_.mode != AgentMode::Null) {
        if (!triggered(ctx, obs)) {
            conn.refresh_schedule();
            return out;
        }
        const auto t0 = clock::now();
        const auto f = nets_->final_state(obs);
        action = nets_->greedy_action(f);
        counters_.compute_seconds += std::chrono::duration<double>(clock::now() - t0).count();
        counters_.macs += nets_->decision_macs(n);
        ++counters_.decisions;
        if (opt_.mode == AgentMode::Train) {
            const auto& x = ctx.noise.step();
            for (std::size_t i = 0; i < dim; ++i) action[i] = std::clamp(action[i] + x[i], -1.0, 1.0);
        }
    }

    enforce_action(conn, std::span(action).first(n), opt_.kappa);
    out.acted = true;
    out.action = action;
    ctx.has_acted = true;
    ctx.acted_rate = 0.0;
    ctx.acted_schedule.clear();
    for (const auto& o : obs) {
        ctx.acted_rate += o.throughput;
        ctx.acted_schedule.push_back(o.schedule_share);
    }

    if (opt_.mode == AgentMode::Train) {
        if (ctx.have_prev) {
            replay_.push(Transition{ctx.prev_state, ctx.prev_action, out.reward, obs});
            ++counters_.transitions;
            out.stored = true;
        }
        if (replay_.size() >= nets_->config().batch) {
            const auto t0 = clock::now();
            out.train = nets_->train_step(replay_, sample_rng_);
            nets_->soft_update();
            counters_.compute_seconds += std::chrono::duration<double>(clock::now() - t0).count();
            counters_.macs += nets_->train_step_macs(n);
            ++counters_.train_steps;
            if (!nets_->all_finite() || !std::isfinite(out.train->critic_loss)) {
                throw std::runtime_error("training diverged: non-finite parameter after train step " +
                                         std::to_string(counters_.train_steps));
            }
        }
        ctx.prev_state = obs;
        ctx.prev_action = action;
        ctx.have_prev = true;
    }
    return out;
}

}  // namespace hmptcp::agent
