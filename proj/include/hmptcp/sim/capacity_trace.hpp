#pragma once

#include <filesystem>
#include <istream>
#include <utility>
#include <vector>

namespace hmptcp::sim {

/// Piecewise-constant link capacity. Breakpoints are (time s, bits/s); the
/// value at t is the last breakpoint with time <= t.
class CapacityTrace {
public:
    struct Breakpoint {
        double time;
        double bps;
    };

    CapacityTrace() : CapacityTrace(1e6) {}
    explicit CapacityTrace(double constant_bps);
    /// Throws std::invalid_argument unless the first breakpoint is at t=0,
    /// times strictly increase and every capacity is positive.
    explicit CapacityTrace(std::vector<Breakpoint> points);

    /// Square wave starting at `first_bps`, toggling every `half_period` seconds until `until`.
    static CapacityTrace square_wave(double first_bps, double second_bps, double half_period, double until);

    double at(double t) const;
    const std::vector<Breakpoint>& points() const { return points_; }

private:
    std::vector<Breakpoint> points_;
};

/// Free-function form used by the rest of the code base.
inline double capacity_at(const CapacityTrace& trace, double t) { return trace.at(t); }

/// Parses `time_s,capacity_mbps` lines; blank lines and '#' comments are skipped.
CapacityTrace parse_capacity_trace(std::istream& in);
CapacityTrace load_capacity_trace(const std::filesystem::path& file);

}  // namespace hmptcp::sim
