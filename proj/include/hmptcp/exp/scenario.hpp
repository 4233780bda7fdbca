#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hmptcp/agent/daemon.hpp"
#include "hmptcp/del/workload.hpp"
#include "hmptcp/sim/capacity_trace.hpp"
#include "hmptcp/sim/path.hpp"

namespace hmptcp::exp {

/// Worker transport variants. DrlOnly is the Hybrid code path with the inner
/// window loop disabled between decision slots.
enum class Controller { Lia, Hybrid, DrlOnly, Cubic };

std::string_view to_string(Controller c);
/// Throws std::invalid_argument on an unknown name.
Controller parse_controller(std::string_view name);
bool uses_agent(Controller c);

struct SquareWave {
    double low_bps = 0.0;
    double high_bps = 0.0;
    double half_period_s = 0.0;
    bool start_high = true;
};

struct PathSpec {
    double capacity_bps = 8e6;
    /// One-way propagation delay.
    double delay_s = 0.05;
    double loss = 0.0;
    int queue_pkts = 100;
    std::optional<SquareWave> square_wave;
    /// Resolved relative to the scenario file.
    std::optional<std::filesystem::path> trace_file;

    /// Square waves are expanded up to `until` seconds.
    sim::PathConfig to_config(double until) const;
};

struct WorkerSpec {
    Controller controller = Controller::Lia;
    std::vector<int> paths;
    std::int64_t model_bytes = 6'000'000;
    double compute_mean_s = 0.5;
    double compute_jitter = 0.1;
    double access_delay_s = 0.0;
    double access_loss = 0.0;
};

/// Single-path CUBIC flow. Bulk when `bytes` is 0, otherwise transfers of
/// `bytes` separated by `gap_s`.
struct CompetitorSpec {
    int path = 0;
    std::int64_t bytes = 0;
    double gap_s = 0.0;
};

struct AgentSpec {
    agent::AgentMode mode = agent::AgentMode::Infer;
    std::optional<std::filesystem::path> hybrid_checkpoint;
    std::optional<std::filesystem::path> drl_checkpoint;
    double slot_s = 0.1;
    double kappa = 1.0;
    std::size_t batch = 32;
    /// Hybrid acts only when its connection's rate or schedule moved.
    bool trigger = true;
    double rate_trigger = 0.25;
    double schedule_trigger = 0.2;
};

struct Scenario {
    std::string name = "scenario";
    double duration_s = 60.0;
    std::uint64_t seed = 1;
    del::ParallelismScheme scheme = del::ParallelismScheme::bsp();
    std::vector<PathSpec> paths;
    std::vector<WorkerSpec> workers;
    std::vector<CompetitorSpec> competitors;
    AgentSpec agent;
    bool timeseries = true;
};

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct LoadedScenario {
    Scenario scenario;
    /// Values outside the usual emulation ranges; accepted but reported.
    std::vector<std::string> warnings;
};

/// Parses a JSON scenario document. Relative file references resolve against `base_dir`.
LoadedScenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
LoadedScenario load_scenario(const std::filesystem::path& file);

/// Structural checks shared by the loader and programmatic construction.
/// Throws ConfigError; returns range warnings.
std::vector<std::string> validate(const Scenario& s);

}  // namespace hmptcp::exp
