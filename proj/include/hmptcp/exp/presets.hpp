#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmptcp/exp/runner.hpp"
#include "hmptcp/exp/scenario.hpp"

namespace hmptcp::exp {

struct PresetOptions {
    std::uint64_t seed = 1;
    /// Fraction of the full transfer size (0.01 turns 600 MB models into 6 MB).
    double scale = 0.01;
    /// Multi-seed presets run seeds seed .. seed + seeds - 1.
    int seeds = 10;
    std::filesystem::path out = "out";
    /// Holds hybrid.ckpt and drl.ckpt; untrained networks are used when absent.
    std::optional<std::filesystem::path> checkpoint_dir;
    std::function<void(const std::string&)> progress;
};

/// One simulation inside a preset.
struct PresetRun {
    /// Sweep point, e.g. "c30" (capacity in Mbps) or "s2" (straggler count).
    std::string group;
    double sweep_value = 0.0;
    Controller controller = Controller::Lia;
    RunMetrics metrics;
};

/// Square-wave tracking on one run of the first experiment.
struct TrackingResult {
    Controller controller = Controller::Lia;
    double mean_abs_error_pps = 0.0;
    std::vector<double> step_times;
    /// Seconds after each step until the smoothed rate reached 80% of the new
    /// capacity (up-steps) or fell to 125% of it (down-steps); the half period if never.
    std::vector<double> reaction_s;
};

struct PresetResult {
    std::vector<PresetRun> runs;
    std::vector<TrackingResult> tracking;
    std::vector<std::filesystem::path> files;
};

std::vector<std::string> preset_names();

/// Throws std::invalid_argument for an unknown preset name.
PresetResult run_preset(std::string_view name, const PresetOptions& options);

/// Two paths, one fixed at 8 Mbps and one alternating 12/4 Mbps every 15 s,
/// 50 ms delay and 3% loss on both, one worker transferring continuously.
Scenario exp1_scenario(Controller c, std::uint64_t seed, double scale);

/// Six workers over two paths of `capacity_mbps`, five CUBIC rivals on the
/// first path; `stragglers` workers get an impaired access link.
Scenario del_scenario(Controller c, std::uint64_t seed, double scale, double capacity_mbps,
                      del::ParallelismScheme scheme, int stragglers = 0);

/// Tracking error and step reactions of the worker's subflow on the varying path.
TrackingResult exp1_tracking(const Scenario& s, const RunResult& run, Controller c);

}  // namespace hmptcp::exp
