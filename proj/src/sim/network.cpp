#include "hmptcp/sim/network.hpp"

#include <stdexcept>
#include <string>

namespace hmptcp::sim {

Network::Network(Simulator& sim, std::uint64_t seed, PacketLog* log) : sim_(sim), seed_(seed), log_(log) {}

int Network::add_path(PathConfig config) {
    const int id = static_cast<int>(paths_.size());
    paths_.push_back(std::make_unique<Path>(
        sim_, id, std::move(config), seed_,
        [this](const Packet& p) {
            auto& h = flows_.at(static_cast<std::size_t>(p.flow_id));
            if (h.on_data) h.on_data(p);
        },
        log_));
    return id;
}

int Network::register_flow(Handler on_data, Handler on_ack) {
    flows_.push_back(FlowHandlers{std::move(on_data), std::move(on_ack), {}, nullptr});
    return static_cast<int>(flows_.size()) - 1;
}

void Network::set_access(int flow_id, AccessConfig access) {
    auto& h = flows_.at(static_cast<std::size_t>(flow_id));
    if (!(access.extra_delay >= 0.0) || !(access.loss_prob >= 0.0 && access.loss_prob < 1.0)) {
        throw std::invalid_argument("access impairment out of range for flow " + std::to_string(flow_id));
    }
    h.access = access;
    h.access_rng = std::make_unique<RandomStream>(seed_, "access/" + std::to_string(flow_id));
}

EnqueueResult Network::send_data(int path_id, const Packet& packet) {
    auto& h = flows_.at(static_cast<std::size_t>(packet.flow_id));
    if (h.access_rng && h.access.loss_prob > 0.0 && h.access_rng->uniform() < h.access.loss_prob) {
        if (log_) log_->record('X', sim_.now(), packet, path_id);
        return EnqueueResult::DroppedRandomLoss;
    }
    return path(path_id).enqueue(packet);
}

void Network::send_ack(int path_id, const Packet& ack) {
    const double delay =
        path(path_id).prop_delay() + flows_.at(static_cast<std::size_t>(ack.flow_id)).access.extra_delay;
    sim_.schedule(sim_.now() + delay, [this, ack, path_id] {
        if (log_) log_->record('A', sim_.now(), ack, path_id);
        auto& h = flows_.at(static_cast<std::size_t>(ack.flow_id));
        if (h.on_ack) h.on_ack(ack);
    });
}

}  // namespace hmptcp::sim
