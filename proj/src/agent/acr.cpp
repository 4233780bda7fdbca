#include "hmptcp/agent/acr.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "hmptcp/nn/kernels.hpp"

namespace hmptcp::agent {

namespace {

using nn::Activation;

nn::Mlp make_actor(const std::string& name, const AcrConfig& c, sim::RandomStream& rng) {
    return nn::Mlp(name, {c.hidden, c.head_hidden, c.head_hidden, c.action_dim},
                   {Activation::Relu, Activation::Relu, Activation::Tanh}, rng);
}

nn::Mlp make_critic(const std::string& name, const AcrConfig& c, sim::RandomStream& rng) {
    return nn::Mlp(name, {c.hidden + c.action_dim, c.head_hidden, c.head_hidden, 1},
                   {Activation::Relu, Activation::Relu, Activation::Linear}, rng);
}

// Transition positions grouped by subflow count so each group forms one LSTM batch.
std::map<std::size_t, std::vector<std::size_t>> group_by_length(const std::vector<const Observation*>& obs) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t j = 0; j < obs.size(); ++j) groups[obs[j]->size()].push_back(j);
    return groups;
}

std::vector<const Observation*> pick(const std::vector<const Observation*>& all, const std::vector<std::size_t>& idx) {
    std::vector<const Observation*> out;
    out.reserve(idx.size());
    for (auto j : idx) out.push_back(all[j]);
    return out;
}

void copy_params(std::span<nn::Parameter* const> from, std::span<nn::Parameter* const> to) {
    for (std::size_t i = 0; i < from.size(); ++i) to[i]->value = from[i]->value;
}

}  // namespace

AcrNetworks::AcrNetworks(const AcrConfig& config, std::uint64_t seed)
    : AcrNetworks(config, sim::RandomStream(seed, "acr/init")) {}

AcrNetworks::AcrNetworks(const AcrConfig& c, sim::RandomStream rng)
    : repr("repr", kFeatureCount, c.hidden, rng),
      target_repr("target.repr", kFeatureCount, c.hidden, rng),
      actor(make_actor("actor", c, rng)),
      target_actor(make_actor("target.actor", c, rng)),
      critic(make_critic("critic", c, rng)),
      target_critic(make_critic("target.critic", c, rng)),
      cfg_(c),
      opt_steps_(1, 3) {
    if (c.action_dim == 0 || c.batch == 0) throw std::invalid_argument("acr: action_dim and batch must be positive");
    sync_targets();
    repr_opt_ = nn::Adam(repr.parameters(), c.representation_lr);
    actor_opt_ = nn::Adam(actor.parameters(), c.actor_lr);
    critic_opt_ = nn::Adam(critic.parameters(), c.critic_lr);
}

std::vector<nn::Parameter*> AcrNetworks::online_parameters() {
    std::vector<nn::Parameter*> out = repr.parameters();
    for (auto* p : actor.parameters()) out.push_back(p);
    for (auto* p : critic.parameters()) out.push_back(p);
    return out;
}

std::vector<nn::Parameter*> AcrNetworks::target_parameters() {
    std::vector<nn::Parameter*> out = target_repr.parameters();
    for (auto* p : target_actor.parameters()) out.push_back(p);
    for (auto* p : target_critic.parameters()) out.push_back(p);
    return out;
}

void AcrNetworks::sync_targets() { copy_params(online_parameters(), target_parameters()); }

void AcrNetworks::soft_update() {
    const auto online = online_parameters();
    const auto target = target_parameters();
    const auto& k = nn::kernels();
    for (std::size_t i = 0; i < online.size(); ++i) {
        if (!online[i]->value.same_shape(target[i]->value)) throw std::logic_error("target shape drifted");
        k.blend(online[i]->value.size(), cfg_.tau, online[i]->value.data(), target[i]->value.data());
    }
}

std::vector<double> AcrNetworks::final_state(const Observation& obs) const {
    const Observation* one = &obs;
    return repr.infer(to_sequence(std::span(&one, 1))).values();
}

std::vector<double> AcrNetworks::target_final_state(const Observation& obs) const {
    const Observation* one = &obs;
    return target_repr.infer(to_sequence(std::span(&one, 1))).values();
}

std::vector<double> AcrNetworks::greedy_action(std::span<const double> f) const {
    if (f.size() != cfg_.hidden) throw std::invalid_argument("final state has the wrong width");
    return actor.infer(nn::Matrix::row_vector(f)).values();
}

double AcrNetworks::q_value(std::span<const double> f, std::span<const double> action) const {
    return critic.infer(critic_input(nn::Matrix::row_vector(f), nn::Matrix::row_vector(action)))(0, 0);
}

nn::Matrix AcrNetworks::critic_input(const nn::Matrix& f, const nn::Matrix& a) const {
    if (f.rows() != a.rows() || f.cols() != cfg_.hidden || a.cols() != cfg_.action_dim) {
        throw std::invalid_argument("critic input shape mismatch");
    }
    nn::Matrix x(f.rows(), cfg_.hidden + cfg_.action_dim);
    for (std::size_t r = 0; r < f.rows(); ++r) {
        std::copy(f.row(r).begin(), f.row(r).end(), x.row(r).begin());
        std::copy(a.row(r).begin(), a.row(r).end(), x.row(r).begin() + static_cast<std::ptrdiff_t>(cfg_.hidden));
    }
    return x;
}

TrainStats AcrNetworks::train_step(const ReplayBuffer& replay, sim::RandomStream& rng) {
    const std::size_t k = cfg_.batch;
    const auto slots = replay.sample_indices(k, rng);
    std::vector<const Observation*> states, nexts;
    nn::Matrix actions(k, cfg_.action_dim), y(k, 1);
    for (std::size_t j = 0; j < k; ++j) {
        const Transition& t = replay.slot(slots[j]);
        if (t.action.size() != cfg_.action_dim) throw std::invalid_argument("stored action has the wrong width");
        states.push_back(&t.state);
        nexts.push_back(&t.next_state);
        std::copy(t.action.begin(), t.action.end(), actions.row(j).begin());
        y(j, 0) = t.reward;
    }

    // Bellman targets from the target networks.
    for (const auto& [len, idx] : group_by_length(nexts)) {
        const auto group = pick(nexts, idx);
        const nn::Matrix f = target_repr.infer(to_sequence(group));
        const nn::Matrix a = target_actor.infer(f);
        const nn::Matrix q = target_critic.infer(critic_input(f, a));
        for (std::size_t g = 0; g < idx.size(); ++g) y(idx[g], 0) += cfg_.gamma * q(g, 0);
    }

    // Critic regression on (f_i, a_i) with f_i from the online representation.
    // With a single subflow count the recorded forward pass is reused by the policy update below.
    const auto state_groups = group_by_length(states);
    const bool one_group = state_groups.size() == 1;
    nn::Matrix f_all(k, cfg_.hidden);
    for (const auto& [len, idx] : state_groups) {
        const auto seq = to_sequence(pick(states, idx));
        const nn::Matrix f = one_group ? repr.forward(seq) : repr.infer(seq);
        for (std::size_t g = 0; g < idx.size(); ++g) std::copy(f.row(g).begin(), f.row(g).end(), f_all.row(idx[g]).begin());
    }
    critic_opt_.zero_grad();
    const nn::Matrix& q = critic.forward(critic_input(f_all, actions));
    TrainStats stats;
    for (std::size_t j = 0; j < k; ++j) stats.mean_q += q(j, 0) / static_cast<double>(k);
    nn::Matrix dq;
    stats.critic_loss = nn::mse_loss(q, y, dq);
    critic.backward(dq);
    critic_opt_.step();

    // Policy ascent on Q(f, E(f)): dQ/da through the actor, then through the representation.
    actor_opt_.zero_grad();
    repr_opt_.zero_grad();
    for (const auto& [len, idx] : state_groups) {
        nn::Matrix f;
        if (one_group) {
            f = f_all;
        } else {
            f = repr.forward(to_sequence(pick(states, idx)));
        }
        const nn::Matrix& a = actor.forward(f);
        critic.forward(critic_input(f, a));
        const nn::Matrix dx = critic.backward(nn::Matrix(idx.size(), 1, -1.0 / static_cast<double>(k)), false);
        nn::Matrix da(idx.size(), cfg_.action_dim);
        for (std::size_t g = 0; g < idx.size(); ++g) {
            for (std::size_t c = 0; c < cfg_.action_dim; ++c) da(g, c) = dx(g, cfg_.hidden + c);
        }
        nn::Matrix dz;
        if (cfg_.action_l2 > 0.0) {
            dz = actor.layers().back().pre_activation();
            for (double& v : dz.values()) v *= 2.0 * cfg_.action_l2 / static_cast<double>(k);
        }
        repr.backward(actor.backward(da, true, cfg_.action_l2 > 0.0 ? &dz : nullptr));
    }
    actor_opt_.step();
    repr_opt_.step();
    return stats;
}

std::vector<nn::NamedTensor> AcrNetworks::tensors() {
    std::vector<nn::NamedTensor> out;
    for (auto* p : online_parameters()) out.push_back({p->name, &p->value});
    for (auto* p : target_parameters()) out.push_back({p->name, &p->value});
    auto moments = [&out](nn::Adam& opt, const std::string& tag) {
        const auto& params = opt.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            out.push_back({"adam." + tag + ".m." + params[i]->name, &opt.first_moments()[i]});
            out.push_back({"adam." + tag + ".v." + params[i]->name, &opt.second_moments()[i]});
        }
    };
    moments(repr_opt_, "repr");
    moments(actor_opt_, "actor");
    moments(critic_opt_, "critic");
    out.push_back({"adam.steps", &opt_steps_});
    return out;
}

void AcrNetworks::save(const std::filesystem::path& file) {
    opt_steps_(0, 0) = static_cast<double>(repr_opt_.step_count());
    opt_steps_(0, 1) = static_cast<double>(actor_opt_.step_count());
    opt_steps_(0, 2) = static_cast<double>(critic_opt_.step_count());
    nn::save_tensors(file, tensors());
}

void AcrNetworks::load(const std::filesystem::path& file) {
    nn::load_tensors(file, tensors());
    repr_opt_.set_step_count(static_cast<std::uint64_t>(opt_steps_(0, 0)));
    actor_opt_.set_step_count(static_cast<std::uint64_t>(opt_steps_(0, 1)));
    critic_opt_.set_step_count(static_cast<std::uint64_t>(opt_steps_(0, 2)));
}

bool AcrNetworks::all_finite() {
    for (auto* p : online_parameters()) {
        if (!p->value.all_finite()) return false;
    }
    for (auto* p : target_parameters()) {
        if (!p->value.all_finite()) return false;
    }
    return true;
}

std::uint64_t AcrNetworks::decision_macs(std::size_t subflows) const {
    const std::uint64_t h = cfg_.hidden, hh = cfg_.head_hidden, a = cfg_.action_dim;
    const std::uint64_t lstm = subflows * 4 * h * (kFeatureCount + h);
    return lstm + h * hh + hh * hh + hh * a;
}

std::uint64_t AcrNetworks::train_step_macs(std::size_t subflows) const {
    const std::uint64_t h = cfg_.hidden, hh = cfg_.head_hidden, a = cfg_.action_dim;
    const std::uint64_t lstm = subflows * 4 * h * (kFeatureCount + h);
    const std::uint64_t act = h * hh + hh * hh + hh * a;
    const std::uint64_t crit = (h + a) * hh + hh * hh + hh;
    // targets: forward only; critic update: repr forward + critic fwd/bwd;
    // policy update: actor and repr fwd/bwd, critic fwd and input gradient.
    const std::uint64_t per_sample = (lstm + act + crit) + (lstm + 3 * crit) + (2 * lstm + 3 * act + 2 * crit);
    return cfg_.batch * per_sample;
}

}  // namespace hmptcp::agent
