#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hmptcp/agent/observation.hpp"
#include "hmptcp/agent/replay.hpp"
#include "hmptcp/nn/adam.hpp"
#include "hmptcp/nn/checkpoint.hpp"
#include "hmptcp/nn/layers.hpp"

namespace hmptcp::agent {

struct AcrConfig {
    std::size_t hidden = 128;        // representation output f
    std::size_t head_hidden = 128;   // actor and critic hidden widths
    std::size_t action_dim = 2;      // largest subflow count the actor serves
    double actor_lr = 0.0009;
    double representation_lr = 0.0009;
    double critic_lr = 0.009;
    double gamma = 0.97;
    double tau = 0.005;
    std::size_t batch = 32;
    /// Weight of the L2 penalty on the actor's output pre-activation z in the
    /// policy loss: action_l2 * mean over the batch of |z|^2.
    double action_l2 = 0.05;
};

struct TrainStats {
    double critic_loss = 0.0;
    double mean_q = 0.0;
};

/// Representation (LSTM over subflows), actor and critic with their target copies.
///   f = N(s),  a = E(f) in [-1,1]^A,  Q(f, a) scalar.
class AcrNetworks {
public:
    AcrNetworks(const AcrConfig& config, std::uint64_t seed);
    AcrNetworks(const AcrNetworks&) = delete;
    AcrNetworks& operator=(const AcrNetworks&) = delete;

    const AcrConfig& config() const { return cfg_; }

    /// Online representation over one observation, subflows fed in index order. Throws on an empty observation.
    std::vector<double> final_state(const Observation& obs) const;
    std::vector<double> target_final_state(const Observation& obs) const;
    /// Deterministic actor output E(f).
    std::vector<double> greedy_action(std::span<const double> f) const;
    double q_value(std::span<const double> f, std::span<const double> action) const;

    /// One critic update followed by one actor and one representation update on
    /// a uniformly drawn minibatch. Throws std::invalid_argument if the buffer
    /// holds fewer than config().batch transitions.
    TrainStats train_step(const ReplayBuffer& replay, sim::RandomStream& rng);

    /// target <- tau * online + (1 - tau) * target for all three networks.
    void soft_update();
    /// Copies online parameters into the targets.
    void sync_targets();

    /// Every online and target tensor, the Adam moments and step counts.
    std::vector<nn::NamedTensor> tensors();
    void save(const std::filesystem::path& file);
    void load(const std::filesystem::path& file);

    bool all_finite();

    std::vector<nn::Parameter*> online_parameters();
    std::vector<nn::Parameter*> target_parameters();

    /// Multiply-accumulates of one decision (final_state + actor) for n subflows.
    std::uint64_t decision_macs(std::size_t subflows) const;
    /// Multiply-accumulates of one train_step when every sample has n subflows.
    std::uint64_t train_step_macs(std::size_t subflows) const;

    nn::Lstm repr, target_repr;
    nn::Mlp actor, target_actor;
    nn::Mlp critic, target_critic;

private:
    AcrNetworks(const AcrConfig& config, sim::RandomStream rng);
    nn::Matrix critic_input(const nn::Matrix& f, const nn::Matrix& a) const;

    AcrConfig cfg_;
    nn::Adam repr_opt_, actor_opt_, critic_opt_;
    nn::Matrix opt_steps_;  // 1 x 3 step counters, kept as a tensor for checkpoints
};

}  // namespace hmptcp::agent
