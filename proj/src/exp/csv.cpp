#include "hmptcp/exp/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace hmptcp::exp {

std::string num(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
    : width_(header.size()), file_(file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    out_.open(file, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + file.string());
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) {
        throw std::logic_error(file_.string() + ": row has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(width_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void write_metrics(const std::filesystem::path& file, const std::vector<RunMetrics>& runs) {
    CsvWriter w(file, kMetricsHeader);
    for (const auto& m : runs) {
        w.row({m.scheme, m.controller, num(m.seed), num(m.mean_iteration_time_s), num(m.unfairness_iters),
               num(m.mean_fluct_pps), num(m.straggler_mean_tput_pps), num(m.aggregate_utility)});
    }
}

void write_series(const std::filesystem::path& file, const std::vector<SeriesRow>& rows) {
    CsvWriter w(file, kSeriesHeader);
    for (const auto& r : rows) {
        w.row({num(r.t), num(r.flow_id), num(r.subflow_id), num(r.rate_pps), num(r.cwnd_pkts), num(r.rtt_s)});
    }
}

}  // namespace hmptcp::exp
