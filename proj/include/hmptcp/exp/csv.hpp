#pragma once

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hmptcp/exp/runner.hpp"

namespace hmptcp::exp {

/// Shortest round-trip decimal form, so equal values always print equally.
std::string num(double x);
template <std::integral T>
std::string num(T x) {
    return std::to_string(x);
}

class CsvWriter {
public:
    /// Creates parent directories. Throws std::runtime_error if the file cannot be opened.
    CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t width_;
    std::filesystem::path file_;
};

inline const std::vector<std::string> kMetricsHeader{"scheme",           "controller",        "seed",
                                                     "mean_iter_time_s", "unfairness_iters",  "mean_fluct_pps",
                                                     "straggler_mean_tput_pps", "aggregate_utility"};
inline const std::vector<std::string> kSeriesHeader{"t_s", "flow_id", "subflow_id", "rate_pps", "cwnd_pkts", "rtt_s"};
inline const std::vector<std::string> kTrainingHeader{"episode", "steps", "mean_reward", "critic_loss"};

void write_metrics(const std::filesystem::path& file, const std::vector<RunMetrics>& runs);
void write_series(const std::filesystem::path& file, const std::vector<SeriesRow>& rows);

}  // namespace hmptcp::exp
