#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmptcp/sim/random.hpp"
#include "hmptcp/sim/simulator.hpp"
#include "hmptcp/transport/connection.hpp"

namespace hmptcp::del {

struct ParallelismScheme {
    enum class Kind { Bsp, Ssp, Tap };
    Kind kind = Kind::Bsp;
    /// SSP only: the largest allowed gap in completed iterations.
    int staleness = 1;

    static ParallelismScheme bsp() { return {Kind::Bsp, 0}; }
    static ParallelismScheme ssp(int s) { return {Kind::Ssp, s}; }
    static ParallelismScheme tap() { return {Kind::Tap, 0}; }
};

std::string to_string(const ParallelismScheme& scheme);
/// Accepts "bsp", "tap" and "ssp:<s>". Throws std::invalid_argument otherwise.
ParallelismScheme parse_scheme(std::string_view text);

/// Workers allowed to begin their next iteration. `iterations` holds completed
/// counts for every worker, `waiting` marks those that finished an upload and
/// have not been released yet.
std::vector<std::size_t> barrier_check(const ParallelismScheme& scheme, std::span<const int> iterations,
                                       const std::vector<bool>& waiting);

enum class Phase { Downloading, Computing, Uploading, Waiting };

std::string_view to_string(Phase phase);

struct FlowRecord {
    double arrival = 0.0;
    double departure = 0.0;
    std::int64_t bytes = 0;
    bool upload = false;
};

struct IterationRecord {
    double start = 0.0;
    /// When the worker was allowed to begin the next iteration.
    double released = 0.0;
    /// Download + compute + upload time, excluding barrier waits.
    double active = 0.0;
};

struct WorkerConfig {
    std::int64_t model_bytes = 60'000;
    double compute_mean = 0.5;
    double compute_jitter = 0.1;
};

struct Worker {
    int id = 0;
    transport::MptcpConnection* conn = nullptr;
    WorkerConfig config;
    Phase phase = Phase::Waiting;
    int iterations = 0;
    double iteration_start = 0.0;
    double active_time = 0.0;
    double phase_start = 0.0;
    std::vector<FlowRecord> flows;
    std::vector<IterationRecord> completed;
    sim::RandomStream rng;
};

/// Drives workers through download, compute and upload against a parameter
/// server with zero aggregation time. Both transfers of an iteration use the
/// worker's connection and are model-sized.
class DelWorkload {
public:
    DelWorkload(sim::Simulator& sim, ParallelismScheme scheme, std::uint64_t seed);

    DelWorkload(const DelWorkload&) = delete;
    DelWorkload& operator=(const DelWorkload&) = delete;

    /// Throws std::invalid_argument on a non-positive model size, a negative
    /// compute mean or a jitter outside [0, 1].
    int add_worker(transport::MptcpConnection& conn, WorkerConfig config);

    /// Every worker begins its first download now.
    void start();

    const ParallelismScheme& scheme() const { return scheme_; }
    const std::vector<Worker>& workers() const { return workers_; }
    std::vector<int> iterations() const;

    /// Records the current spread of iteration counts; call at a fixed interval.
    void sample_unfairness();
    /// Mean of the recorded spreads (the current spread if none were recorded).
    double mean_unfairness() const;

    /// Mean over workers of their mean iteration time (start to release). A
    /// worker without a completed iteration contributes its elapsed time.
    double mean_iteration_time(double now) const;
    /// Same over the active (non-waiting) part of each iteration.
    double mean_active_time(double now) const;

    /// Index of the worker with the fewest iterations, ties broken by the
    /// longer current iteration and then by the lower index.
    std::size_t straggler(double now) const;

    /// Called after every phase change, for invariant checks in tests.
    void set_observer(std::function<void(const DelWorkload&)> fn) { observer_ = std::move(fn); }

private:
    void begin_iteration(std::size_t u);
    void on_download_done(std::size_t u, double now);
    void on_compute_done(std::size_t u);
    void on_upload_done(std::size_t u, double now);
    void notify();

    sim::Simulator& sim_;
    ParallelismScheme scheme_;
    std::uint64_t seed_;
    std::vector<Worker> workers_;
    std::vector<double> unfairness_samples_;
    std::function<void(const DelWorkload&)> observer_;
};

}  // namespace hmptcp::del
