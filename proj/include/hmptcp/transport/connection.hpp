#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hmptcp/sim/network.hpp"
#include "hmptcp/transport/coupled.hpp"
#include "hmptcp/transport/cubic.hpp"

namespace hmptcp::transport {

enum class ControllerKind { Lia, Hybrid, SinglePathCubic };

std::string_view to_string(ControllerKind kind);

struct ConnectionOptions {
    ControllerKind controller = ControllerKind::Lia;
    /// When false the per-ACK increase and per-loss decrease are skipped and
    /// windows stay at whatever the last enforcement set (the DRL-only ablation).
    bool inner_loop = true;
    int packet_size = sim::kDefaultPacketBytes;
    double initial_window = kMinWindow;
    double min_rto = 1.0;
    /// ω_max = bdp_cap_factor * srtt * delivery-rate estimate.
    double bdp_cap_factor = 4.0;
};

/// Exponentially weighted delivery rate: each delivery of n packets adds n/tau
/// and the estimate decays with time constant tau (one smoothed RTT).
class RateEstimator {
public:
    void add(double now, double packets, double tau);
    double read(double now, double tau) const;

private:
    double value_ = 0.0;
    double last_ = 0.0;
};

struct SlotCounters {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    double cwnd_mark = kMinWindow;
};

struct SubflowState {
    int path_id = 0;
    double cwnd = kMinWindow;
    double srtt = 0.0;
    double min_rtt = 0.0;
    RateEstimator rate;

    // Sender.
    std::int64_t next_seq = 0;
    /// Lowest unacknowledged sequence (cumulative ACK point).
    std::int64_t snd_una = 0;
    int dupacks = 0;
    bool in_recovery = false;
    std::int64_t recover = 0;
    /// Fast-recovery window inflation: one packet per duplicate ACK, deflated
    /// by partial ACKs and cleared when recovery ends. Counts toward sending
    /// room only; controllers see cwnd alone.
    std::int64_t inflation = 0;
    /// Partial ACKs seen in the current fast recovery; only the first restarts
    /// the retransmit timer (the "impatient" NewReno variant).
    int partial_acks = 0;
    /// After a timeout everything from snd_una is resent in order; packets
    /// below resend_next count as in flight, the rest as lost.
    bool go_back = false;
    std::int64_t resend_next = 0;
    /// Retransmission deadline; infinity when disarmed. At most one timer event
    /// is pending per subflow and it re-schedules itself if the deadline moved.
    double rto_deadline = std::numeric_limits<double>::infinity();
    bool timer_pending = false;
    /// Sizes of outstanding packets, front = snd_una.
    std::deque<int> outstanding;
    std::set<std::int64_t> retransmitted;

    // Receiver.
    std::int64_t rcv_next = 0;
    std::set<std::int64_t> out_of_order;

    // Statistics.
    std::uint64_t packets_sent = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t packets_acked = 0;
    std::uint64_t bytes_acked = 0;
    std::uint64_t loss_events = 0;
    std::uint64_t timeouts = 0;
    SlotCounters slot;

    CubicState cubic;

    std::int64_t in_flight() const { return next_seq - snd_una; }
    int window_space() const;
};

/// What happened to a window, for tracing and oracle comparisons.
struct WindowEvent {
    enum class Kind { Ack, Loss, Timeout, Enforce };
    double time;
    std::size_t subflow;
    Kind kind;
    std::int64_t newly_acked;
    double cwnd_before;
    double cwnd_after;
};

/// Per-subflow measurements over the slot that just ended.
struct SubflowSlotStats {
    double sent_pps = 0.0;
    double delivered_pps = 0.0;
    double srtt = 0.0;
    double cwnd = 0.0;
    double cwnd_delta = 0.0;
    double schedule_share = 0.0;
};

/// A (multipath) TCP sender with its receiver. Each subflow runs cumulative-ACK
/// loss recovery (three duplicate ACKs or RTO, NewReno partial ACKs) and the
/// configured window controller. A single-path CUBIC competitor is a connection
/// with one subflow and ControllerKind::SinglePathCubic.
class MptcpConnection {
public:
    using CompletionFn = std::function<void(double now)>;
    using TraceFn = std::function<void(const WindowEvent&)>;

    /// Throws std::invalid_argument on duplicate or empty paths, or when CUBIC gets more than one path.
    MptcpConnection(sim::Network& net, std::vector<int> path_ids, ConnectionOptions options);

    MptcpConnection(const MptcpConnection&) = delete;
    MptcpConnection& operator=(const MptcpConnection&) = delete;

    int flow_id() const { return flow_id_; }
    ControllerKind controller() const { return options_.controller; }
    const ConnectionOptions& options() const { return options_; }
    std::size_t subflow_count() const { return subflows_.size(); }
    const SubflowState& subflow(std::size_t i) const { return subflows_.at(i); }
    const std::vector<SubflowState>& subflows() const { return subflows_; }

    /// Queues `bytes` of application data; `done` fires when all of it is acknowledged.
    void start_transfer(std::int64_t bytes, CompletionFn done = {});
    bool transfer_active() const { return transfer_active_; }
    /// Packets of the current transfer not yet handed to any subflow.
    std::int64_t app_queue_packets() const { return app_packets_left_; }
    std::int64_t app_queue_bytes() const;
    bool idle() const;

    std::vector<double> windows() const;
    std::vector<double> rtts() const;
    const Schedule& schedule() const { return schedule_; }
    bool enforcement_active() const { return enforced_; }

    /// Upper window bound of subflow i: max(cwnd, factor * srtt * rate estimate).
    double window_cap(std::size_t i) const;

    /// Recomputes h from the current windows and smoothed RTTs and drops any enforced schedule.
    void refresh_schedule();

    /// Adopts enforced windows (clamped to [ω_min, window_cap]) and schedule;
    /// the inner loop continues from these values. Throws std::invalid_argument
    /// on dimension mismatch or when the controller is not Hybrid.
    void apply_enforcement(std::span<const double> windows, const Schedule& schedule);

    /// Assigns sequence numbers to as many new packets as window space and the
    /// application queue allow, striped across subflows by the active schedule.
    /// The caller is responsible for transmitting them; pump() does both.
    std::vector<std::pair<std::size_t, sim::Packet>> dispatch_packets(double now);

    /// Per-subflow measurements since the previous call; resets the slot counters.
    std::vector<SubflowSlotStats> close_slot(double now, double slot_length);

    /// Directly exercised by unit tests; normally triggered by ACK processing.
    void on_loss(std::size_t i, WindowEvent::Kind kind = WindowEvent::Kind::Loss);
    void on_newly_acked(std::size_t i, std::int64_t count);

    void set_trace(TraceFn fn) { trace_ = std::move(fn); }
    /// Test hook: overwrite a subflow's window and smoothed RTT.
    void set_window_for_test(std::size_t i, double cwnd, std::optional<double> srtt = std::nullopt);

    std::uint64_t total_packets_acked() const;

private:
    void pump();
    void transmit(std::size_t i, const sim::Packet& p);
    void retransmit(std::size_t i, std::int64_t seq);
    void arm_timer(std::size_t i);
    void disarm_timer(std::size_t i);
    void on_timer(std::size_t i);
    void handle_data(const sim::Packet& p);
    void handle_ack(const sim::Packet& ack);
    void update_rtt(SubflowState& s, double sample);
    void emit(std::size_t i, WindowEvent::Kind kind, std::int64_t acked, double before);

    sim::Network& net_;
    sim::Simulator& sim_;
    ConnectionOptions options_;
    int flow_id_;
    std::vector<SubflowState> subflows_;
    Schedule schedule_;
    bool enforced_ = false;

    bool transfer_active_ = false;
    std::int64_t app_packets_left_ = 0;
    std::int64_t transfer_packets_ = 0;
    std::int64_t transfer_acked_ = 0;
    int last_packet_size_ = 0;
    CompletionFn on_complete_;

    TraceFn trace_;
};

}  // namespace hmptcp::transport
