#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hmptcp/agent/acr.hpp"
#include "hmptcp/exp/scenario.hpp"

namespace hmptcp::exp {

struct TrainOptions {
    Controller controller = Controller::Hybrid;
    int sessions = 3;
    std::size_t samples_per_session = 30'000;
    double episode_s = 30.0;
    /// Seeds the scenario stream, which is the same for every session and controller.
    std::uint64_t seed = 1;
    double slot_s = 0.1;
    std::size_t moving_average = 10;
    std::function<void(const std::string&)> progress;
};

struct EpisodeLog {
    int episode = 0;
    std::size_t steps = 0;
    double mean_reward = 0.0;
    double critic_loss = 0.0;
};

struct SessionLog {
    std::vector<EpisodeLog> episodes;
    std::size_t samples = 0;
    std::size_t train_steps = 0;
    double compute_seconds = 0.0;
    double final_moving_average = 0.0;
};

struct TrainResult {
    Controller controller = Controller::Hybrid;
    std::vector<SessionLog> sessions;
    /// Mean episode reward averaged over sessions, per episode index.
    std::vector<double> learning_score;
    /// Trailing moving average of learning_score.
    std::vector<double> moving_average;
    double final_score = 0.0;
    std::size_t best_session = 0;
    std::vector<std::shared_ptr<agent::AcrNetworks>> networks;
};

/// Random bulk-transfer scenario for one training episode, drawn from the
/// emulation ranges (4-128 Mbps, 3-300 ms round trip, 20-500 packet buffers).
Scenario training_scenario(std::uint64_t seed, std::size_t episode, double duration_s, Controller controller);

/// Trailing mean over up to `window` values ending at each index.
std::vector<double> trailing_mean(const std::vector<double>& xs, std::size_t window);

/// Throws std::runtime_error if training produces non-finite parameters.
TrainResult train_agent(const TrainOptions& options);

/// train_<controller>_session<k>.csv, learning_score_<controller>.csv and
/// checkpoints (<controller>.ckpt is the session with the best final score).
std::vector<std::filesystem::path> write_training_outputs(const TrainResult& result, const std::filesystem::path& dir);

}  // namespace hmptcp::exp
