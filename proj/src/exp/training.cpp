#include "hmptcp/exp/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hmptcp/agent/daemon.hpp"
#include "hmptcp/exp/csv.hpp"
#include "hmptcp/exp/runner.hpp"
#include "hmptcp/sim/random.hpp"

namespace hmptcp::exp {

Scenario training_scenario(std::uint64_t seed, std::size_t episode, double duration_s, Controller controller) {
    sim::RandomStream rng(seed, "train/scenario/" + std::to_string(episode));
    Scenario s;
    s.name = "train-" + std::to_string(episode);
    s.duration_s = duration_s;
    s.seed = sim::derive_seed(seed, "train/run/" + std::to_string(episode));
    s.scheme = del::ParallelismScheme::tap();
    s.timeseries = false;
    for (int p = 0; p < 2; ++p) {
        PathSpec path;
        path.capacity_bps = rng.uniform(4e6, 128e6);
        path.delay_s = rng.uniform(0.003, 0.3) / 2.0;
        path.queue_pkts = 20 + static_cast<int>(rng.index(481));
        path.loss = rng.uniform(0.0, 0.03);
        if (p == 1 && rng.uniform() < 0.5) {
            path.square_wave = SquareWave{path.capacity_bps * rng.uniform(0.2, 0.6), path.capacity_bps,
                                          rng.uniform(5.0, 15.0), true};
        }
        s.paths.push_back(path);
    }
    WorkerSpec w;
    w.controller = controller;
    w.paths = {0, 1};
    w.model_bytes = std::int64_t{1} << 50;
    w.compute_mean_s = 0.0;
    w.compute_jitter = 0.0;
    s.workers.push_back(w);
    const auto rivals = rng.index(3);
    for (std::size_t k = 0; k < rivals; ++k) s.competitors.push_back(CompetitorSpec{0, 0, 0.0});
    s.agent.mode = agent::AgentMode::Train;
    return s;
}

std::vector<double> trailing_mean(const std::vector<double>& xs, std::size_t window) {
    std::vector<double> out;
    out.reserve(xs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sum += xs[i];
        if (i >= window) sum -= xs[i - window];
        out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
    }
    return out;
}

TrainResult train_agent(const TrainOptions& opt) {
    if (!uses_agent(opt.controller)) throw std::invalid_argument("only hybrid and drl controllers are trained");
    if (opt.sessions < 1) throw std::invalid_argument("at least one session is required");
    if (opt.samples_per_session < 1) throw std::invalid_argument("a session needs a positive sample budget");
    if (!(opt.episode_s > 0.0)) throw std::invalid_argument("episode length must be positive");

    TrainResult result;
    result.controller = opt.controller;
    const std::string name(to_string(opt.controller));
    for (int session = 0; session < opt.sessions; ++session) {
        const std::uint64_t session_seed =
            sim::derive_seed(opt.seed, "train/session/" + std::to_string(session) + "/" + name);
        agent::AgentOptions ao;
        ao.mode = agent::AgentMode::Train;
        ao.slot = opt.slot_s;
        ao.act_every_slot = true;
        auto nets = std::make_shared<agent::AcrNetworks>(ao.acr, session_seed);
        agent::DrlAgent agent(ao, session_seed, nets);

        SessionLog log;
        for (std::size_t episode = 0; log.samples < opt.samples_per_session; ++episode) {
            Scenario s = training_scenario(opt.seed, episode, opt.episode_s, opt.controller);
            s.agent.slot_s = opt.slot_s;
            EpisodeLog e;
            e.episode = static_cast<int>(episode);
            double reward_sum = 0.0, loss_sum = 0.0;
            std::size_t losses = 0;
            RunOptions ro;
            (opt.controller == Controller::Hybrid ? ro.hybrid_agent : ro.drl_agent) = &agent;
            ro.on_tick = [&](const agent::TickResult& t) {
                if (t.stored) {
                    ++e.steps;
                    ++log.samples;
                    reward_sum += t.reward;
                }
                if (t.train) {
                    loss_sum += t.train->critic_loss;
                    ++losses;
                }
                return log.samples < opt.samples_per_session;
            };
            run_scenario(s, ro);
            if (e.steps == 0) continue;
            e.mean_reward = reward_sum / static_cast<double>(e.steps);
            e.critic_loss = losses ? loss_sum / static_cast<double>(losses) : 0.0;
            log.episodes.push_back(e);
            if (opt.progress && episode % 10 == 0) {
                opt.progress(name + " session " + std::to_string(session) + " episode " + std::to_string(episode) +
                             " samples " + std::to_string(log.samples) + " reward " + num(e.mean_reward));
            }
        }
        log.train_steps = agent.counters().train_steps;
        log.compute_seconds = agent.counters().compute_seconds;
        std::vector<double> rewards;
        for (const auto& e : log.episodes) rewards.push_back(e.mean_reward);
        const auto ma = trailing_mean(rewards, opt.moving_average);
        log.final_moving_average = ma.empty() ? 0.0 : ma.back();
        result.sessions.push_back(std::move(log));
        result.networks.push_back(nets);
    }

    std::size_t episodes = 0;
    for (const auto& s : result.sessions) episodes = std::max(episodes, s.episodes.size());
    for (std::size_t i = 0; i < episodes; ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto& s : result.sessions) {
            if (i < s.episodes.size()) {
                sum += s.episodes[i].mean_reward;
                ++n;
            }
        }
        result.learning_score.push_back(sum / n);
    }
    result.moving_average = trailing_mean(result.learning_score, opt.moving_average);
    result.final_score = result.moving_average.empty() ? 0.0 : result.moving_average.back();
    for (std::size_t k = 1; k < result.sessions.size(); ++k) {
        if (result.sessions[k].final_moving_average > result.sessions[result.best_session].final_moving_average) {
            result.best_session = k;
        }
    }
    return result;
}

std::vector<std::filesystem::path> write_training_outputs(const TrainResult& r, const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    const std::string name(to_string(r.controller));
    for (std::size_t k = 0; k < r.sessions.size(); ++k) {
        const auto file = dir / ("train_" + name + "_session" + std::to_string(k) + ".csv");
        CsvWriter w(file, kTrainingHeader);
        for (const auto& e : r.sessions[k].episodes) {
            w.row({num(e.episode), num(e.steps), num(e.mean_reward), num(e.critic_loss)});
        }
        files.push_back(file);
        const auto ckpt = dir / (name + "_session" + std::to_string(k) + ".ckpt");
        r.networks[k]->save(ckpt);
        files.push_back(ckpt);
    }
    const auto score = dir / ("learning_score_" + name + ".csv");
    {
        CsvWriter w(score, {"episode", "learning_score", "moving_average"});
        for (std::size_t i = 0; i < r.learning_score.size(); ++i) {
            w.row({num(i), num(r.learning_score[i]), num(r.moving_average[i])});
        }
    }
    files.push_back(score);
    const auto best = dir / (name + ".ckpt");
    r.networks[r.best_session]->save(best);
    files.push_back(best);
    return files;
}

}  // namespace hmptcp::exp
