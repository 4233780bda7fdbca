#include "hmptcp/sim/capacity_trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hmptcp::sim {

CapacityTrace::CapacityTrace(double constant_bps) : CapacityTrace(std::vector<Breakpoint>{{0.0, constant_bps}}) {}

CapacityTrace::CapacityTrace(std::vector<Breakpoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("capacity trace is empty");
    if (points_.front().time != 0.0) throw std::invalid_argument("capacity trace must start at t=0");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!(p.bps > 0.0) || !std::isfinite(p.bps)) {
            throw std::invalid_argument("capacity must be positive at breakpoint " + std::to_string(i));
        }
        if (i > 0 && !(p.time > points_[i - 1].time)) {
            throw std::invalid_argument("capacity trace times must strictly increase at breakpoint " +
                                        std::to_string(i));
        }
    }
}

CapacityTrace CapacityTrace::square_wave(double first_bps, double second_bps, double half_period, double until) {
    if (!(half_period > 0.0)) throw std::invalid_argument("square wave half period must be positive");
    std::vector<Breakpoint> pts;
    bool high = true;
    for (double t = 0.0; t < until; t += half_period) {
        pts.push_back({t, high ? first_bps : second_bps});
        high = !high;
    }
    if (pts.empty()) pts.push_back({0.0, first_bps});
    return CapacityTrace(std::move(pts));
}

double CapacityTrace::at(double t) const {
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double v, const Breakpoint& b) { return v < b.time; });
    if (it == points_.begin()) return points_.front().bps;
    return std::prev(it)->bps;
}

CapacityTrace parse_capacity_trace(std::istream& in) {
    std::vector<CapacityTrace::Breakpoint> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (pts.empty() && line.find("time_s") != std::string::npos) continue;  // header row
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("capacity trace line " + std::to_string(lineno) + ": expected time_s,capacity_mbps");
        }
        try {
            std::size_t used = 0;
            const std::string ts = line.substr(0, comma), cs = line.substr(comma + 1);
            double t = std::stod(ts, &used);
            double mbps = std::stod(cs, &used);
            pts.push_back({t, mbps * 1e6});
        } catch (const std::logic_error&) {
            throw std::invalid_argument("capacity trace line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return CapacityTrace(std::move(pts));
}

CapacityTrace load_capacity_trace(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open capacity trace " + file.string());
    return parse_capacity_trace(in);
}

}  // namespace hmptcp::sim
