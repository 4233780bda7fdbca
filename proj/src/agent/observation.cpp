#include "hmptcp/agent/observation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hmptcp::agent {

Observation observe(std::span<const transport::SubflowSlotStats> slot) {
    Observation out(slot.size());
    if (slot.empty()) return out;
    double min_rtt = slot[0].srtt;
    for (const auto& s : slot) min_rtt = std::min(min_rtt, s.srtt);
    for (std::size_t i = 0; i < slot.size(); ++i) {
        out[i].sending_rate = slot[i].sent_pps;
        out[i].throughput = slot[i].delivered_pps;
        out[i].rtt = slot[i].srtt;
        out[i].cwnd_delta = slot[i].cwnd_delta;
        out[i].schedule_share = std::clamp(slot[i].schedule_share, 0.0, 1.0);
        out[i].rtt_diff = slot[i].srtt - min_rtt;
    }
    return out;
}

std::array<double, kFeatureCount> normalize(const SubflowObservation& o) {
    return {o.sending_rate / kRateScale, o.throughput / kRateScale, o.rtt / kRttScale,
            o.cwnd_delta / kCwndScale,   o.schedule_share,          o.rtt_diff / kRttScale};
}

std::vector<nn::Matrix> to_sequence(std::span<const Observation* const> batch) {
    if (batch.empty()) throw std::invalid_argument("empty observation batch");
    const std::size_t len = batch.front()->size();
    if (len == 0) throw std::invalid_argument("observation has no subflows");
    std::vector<nn::Matrix> seq(len, nn::Matrix(batch.size(), kFeatureCount));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b]->size() != len) throw std::invalid_argument("observations in a batch differ in length");
        for (std::size_t t = 0; t < len; ++t) {
            const auto f = normalize((*batch[b])[t]);
            std::copy(f.begin(), f.end(), seq[t].row(b).begin());
        }
    }
    return seq;
}

double compute_reward(std::span<const double> delivered_rates) {
    double r = 0.0;
    for (double x : delivered_rates) r += std::log(std::max(x, kRateFloor));
    return r;
}

double compute_reward(const Observation& o) {
    double r = 0.0;
    for (const auto& s : o) r += std::log(std::max(s.throughput, kRateFloor));
    return r;
}

}  // namespace hmptcp::agent
