#include "hmptcp/sim/path.hpp"

#include <algorithm>
#include <cassert>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hmptcp::sim {

void PacketLog::absorb(std::string_view s) {
    for (unsigned char c : s) {
        hash_ ^= c;
        hash_ *= 0x100000001B3ULL;
    }
}

void PacketLog::record(char event, double t, const Packet& p, int path_id) {
    char buf[160];
    const int n = std::snprintf(buf, sizeof buf, "%a %c %d %d %d %" PRId64 " %d\n", t, event, path_id, p.flow_id,
                                p.subflow_id, p.seq, p.is_ack ? 1 : 0);
    std::string_view line(buf, static_cast<std::size_t>(n));
    absorb(line);
    ++lines_;
    if (keep_text_) text_.append(line);
}

void PathConfig::validate() const {
    if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
        throw std::invalid_argument("loss_prob must lie in [0,1], got " + std::to_string(loss_prob));
    }
    if (queue_limit < 1) throw std::invalid_argument("queue_limit must be >= 1");
    if (!(prop_delay >= 0.0) || !std::isfinite(prop_delay)) {
        throw std::invalid_argument("prop_delay must be a non-negative finite number");
    }
}

Path::Path(Simulator& sim, int id, PathConfig config, std::uint64_t seed, DeliverFn deliver, PacketLog* log)
    : sim_(sim),
      id_(id),
      config_(std::move(config)),
      loss_rng_(seed, "path/" + std::to_string(id) + "/loss"),
      deliver_(std::move(deliver)),
      log_(log) {
    config_.validate();
}

EnqueueResult Path::enqueue(const Packet& packet) {
    if (packet.size <= 0) throw std::invalid_argument("packet size must be positive");
    const double now = sim_.now();
    ++counters_.offered;

    // Exactly one draw per offered packet, even for loss_prob 0 or 1.
    if (loss_rng_.uniform() < config_.loss_prob) {
        ++counters_.dropped_loss;
        if (log_) log_->record('L', now, packet, id_);
        return EnqueueResult::DroppedRandomLoss;
    }
    if (queue_.size() >= static_cast<std::size_t>(config_.queue_limit)) {
        ++counters_.dropped_full;
        if (log_) log_->record('Q', now, packet, id_);
        return EnqueueResult::DroppedQueueFull;
    }

    const double start = std::max(busy_until_, now);
    const double finish = start + packet.size * 8.0 / config_.capacity.at(start);
    busy_until_ = finish;
    queue_.push_back(packet);
    assert(queue_.size() <= static_cast<std::size_t>(config_.queue_limit));
    counters_.max_occupancy = std::max(counters_.max_occupancy, queue_.size());
    ++counters_.enqueued;
    if (log_) log_->record('E', now, packet, id_);
    sim_.schedule(finish, [this] { on_transmit_complete(); });
    return EnqueueResult::Enqueued;
}

void Path::on_transmit_complete() {
    Packet p = queue_.front();
    queue_.pop_front();
    sim_.schedule(sim_.now() + config_.prop_delay, [this, p] {
        ++counters_.delivered;
        counters_.delivered_bytes += static_cast<std::uint64_t>(p.size);
        if (log_) log_->record('D', sim_.now(), p, id_);
        deliver_(p);
    });
}

}  // namespace hmptcp::sim
