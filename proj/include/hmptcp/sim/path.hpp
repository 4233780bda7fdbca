#pragma once

#include <cstdint>
#include <deque>
#include <functional>

#include "hmptcp/sim/capacity_trace.hpp"
#include "hmptcp/sim/packet.hpp"
#include "hmptcp/sim/random.hpp"
#include "hmptcp/sim/simulator.hpp"

namespace hmptcp::sim {

struct PathConfig {
    CapacityTrace capacity;
    /// One-way propagation delay in seconds.
    double prop_delay = 0.05;
    double loss_prob = 0.0;
    /// Drop-tail limit in packets, counting the one in service.
    int queue_limit = 100;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

enum class EnqueueResult { Enqueued, DroppedQueueFull, DroppedRandomLoss };

struct PathCounters {
    std::uint64_t offered = 0;
    std::uint64_t enqueued = 0;
    std::uint64_t dropped_full = 0;
    std::uint64_t dropped_loss = 0;
    std::uint64_t delivered = 0;
    std::uint64_t delivered_bytes = 0;
    std::size_t max_occupancy = 0;
};

/// A bottleneck link: wire loss, then a finite FIFO served at the (possibly
/// time-varying) capacity, then propagation delay to the far end.
/// ACKs do not use this queue; see Network.
class Path {
public:
    using DeliverFn = std::function<void(const Packet&)>;

    Path(Simulator& sim, int id, PathConfig config, std::uint64_t seed, DeliverFn deliver,
         PacketLog* log = nullptr);

    Path(const Path&) = delete;
    Path& operator=(const Path&) = delete;

    /// Offers a data packet at the current simulated time.
    EnqueueResult enqueue(const Packet& packet);

    int id() const { return id_; }
    const PathConfig& config() const { return config_; }
    double capacity_at(double t) const { return config_.capacity.at(t); }
    double prop_delay() const { return config_.prop_delay; }
    std::size_t occupancy() const { return queue_.size(); }
    double busy_until() const { return busy_until_; }
    const PathCounters& counters() const { return counters_; }

private:
    void on_transmit_complete();

    Simulator& sim_;
    int id_;
    PathConfig config_;
    RandomStream loss_rng_;
    DeliverFn deliver_;
    PacketLog* log_;
    std::deque<Packet> queue_;
    double busy_until_ = 0.0;
    PathCounters counters_;
};

}  // namespace hmptcp::sim
