#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hmptcp/sim/path.hpp"

namespace hmptcp::sim {

/// Per-flow impairment in front of the shared bottlenecks (e.g. a worker at a
/// poor radio position): random loss before the path queue and extra delay on
/// the return direction.
struct AccessConfig {
    double extra_delay = 0.0;
    double loss_prob = 0.0;
};

/// Set of bottleneck paths plus the flow registry that routes delivered data
/// to receivers and ACKs back to senders. The reverse (ACK) direction is
/// lossless and uncongested: an ACK arrives one propagation delay after it is sent.
class Network {
public:
    using Handler = std::function<void(const Packet&)>;

    Network(Simulator& sim, std::uint64_t seed, PacketLog* log = nullptr);

    int add_path(PathConfig config);
    Path& path(int id) { return *paths_.at(static_cast<std::size_t>(id)); }
    const Path& path(int id) const { return *paths_.at(static_cast<std::size_t>(id)); }
    std::size_t path_count() const { return paths_.size(); }

    /// Returns a fresh flow id whose data and ACKs are dispatched to the handlers.
    int register_flow(Handler on_data, Handler on_ack);

    /// Throws std::invalid_argument for an unknown flow or out-of-range values.
    void set_access(int flow_id, AccessConfig access);

    EnqueueResult send_data(int path_id, const Packet& packet);
    void send_ack(int path_id, const Packet& ack);

    Simulator& simulator() { return sim_; }
    std::uint64_t seed() const { return seed_; }
    PacketLog* log() { return log_; }

private:
    struct FlowHandlers {
        Handler on_data;
        Handler on_ack;
        AccessConfig access;
        std::unique_ptr<RandomStream> access_rng;
    };

    Simulator& sim_;
    std::uint64_t seed_;
    PacketLog* log_;
    std::vector<std::unique_ptr<Path>> paths_;
    std::vector<FlowHandlers> flows_;
};

}  // namespace hmptcp::sim
