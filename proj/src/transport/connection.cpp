#include "hmptcp/transport/connection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hmptcp::transport {

std::string_view to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Lia: return "lia";
        case ControllerKind::Hybrid: return "hybrid";
        case ControllerKind::SinglePathCubic: return "cubic";
    }
    return "?";
}

void RateEstimator::add(double now, double packets, double tau) {
    value_ = read(now, tau) + packets / tau;
    last_ = now;
}

double RateEstimator::read(double now, double tau) const {
    if (value_ == 0.0) return 0.0;
    return value_ * std::exp(-(now - last_) / tau);
}

int SubflowState::window_space() const {
    const auto allowed = static_cast<std::int64_t>(std::floor(cwnd)) + inflation;
    const std::int64_t pipe = go_back ? resend_next - snd_una : in_flight();
    return static_cast<int>(std::max<std::int64_t>(0, allowed - pipe));
}

MptcpConnection::MptcpConnection(sim::Network& net, std::vector<int> path_ids, ConnectionOptions options)
    : net_(net), sim_(net.simulator()), options_(options) {
    if (path_ids.empty()) throw std::invalid_argument("connection needs at least one path");
    std::vector<int> sorted = path_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("a connection may hold at most one subflow per path");
    }
    if (options_.controller == ControllerKind::SinglePathCubic && path_ids.size() != 1) {
        throw std::invalid_argument("a CUBIC flow is single-path");
    }
    if (options_.packet_size <= 0) throw std::invalid_argument("packet size must be positive");

    flow_id_ = net_.register_flow([this](const sim::Packet& p) { handle_data(p); },
                                  [this](const sim::Packet& p) { handle_ack(p); });
    const double start_window = std::max(kMinWindow, options_.initial_window);
    for (int pid : path_ids) {
        SubflowState s;
        s.path_id = pid;
        s.cwnd = start_window;
        // The handshake yields the first RTT sample.
        s.srtt = std::max(2.0 * net_.path(pid).prop_delay(), 1e-4);
        s.min_rtt = s.srtt;
        s.slot.cwnd_mark = s.cwnd;
        s.cubic = CubicState{s.cwnd, sim_.now(), 0.0};
        subflows_.push_back(std::move(s));
    }
    refresh_schedule();
}

std::int64_t MptcpConnection::app_queue_bytes() const {
    if (app_packets_left_ == 0) return 0;
    return (app_packets_left_ - 1) * options_.packet_size + last_packet_size_;
}

bool MptcpConnection::idle() const { return !transfer_active_; }

std::vector<double> MptcpConnection::windows() const {
    std::vector<double> w;
    w.reserve(subflows_.size());
    for (const auto& s : subflows_) w.push_back(s.cwnd);
    return w;
}

std::vector<double> MptcpConnection::rtts() const {
    std::vector<double> r;
    r.reserve(subflows_.size());
    for (const auto& s : subflows_) r.push_back(s.srtt);
    return r;
}

std::uint64_t MptcpConnection::total_packets_acked() const {
    std::uint64_t n = 0;
    for (const auto& s : subflows_) n += s.packets_acked;
    return n;
}

double MptcpConnection::window_cap(std::size_t i) const {
    const auto& s = subflows_.at(i);
    const double bdp = s.srtt * s.rate.read(sim_.now(), s.srtt);
    return std::max(s.cwnd, options_.bdp_cap_factor * std::max(bdp, kMinWindow));
}

void MptcpConnection::refresh_schedule() {
    schedule_ = compute_schedule(windows(), rtts());
    enforced_ = false;
}

void MptcpConnection::apply_enforcement(std::span<const double> windows, const Schedule& schedule) {
    if (options_.controller != ControllerKind::Hybrid) {
        throw std::invalid_argument("enforcement requires the hybrid controller");
    }
    if (windows.size() != subflows_.size() || schedule.size() != subflows_.size()) {
        throw std::invalid_argument("enforcement dimension mismatch");
    }
    for (std::size_t i = 0; i < subflows_.size(); ++i) {
        const double before = subflows_[i].cwnd;
        const double cap = window_cap(i);
        subflows_[i].cwnd = std::clamp(windows[i], kMinWindow, cap);
        subflows_[i].slot.cwnd_mark = subflows_[i].cwnd;
        emit(i, WindowEvent::Kind::Enforce, 0, before);
    }
    schedule_ = schedule;
    enforced_ = true;
    pump();
}

void MptcpConnection::start_transfer(std::int64_t bytes, CompletionFn done) {
    if (bytes <= 0) throw std::invalid_argument("transfer size must be positive");
    if (transfer_active_) throw std::logic_error("a transfer is already in progress");
    const std::int64_t size = options_.packet_size;
    transfer_packets_ = (bytes + size - 1) / size;
    last_packet_size_ = static_cast<int>(bytes - (transfer_packets_ - 1) * size);
    app_packets_left_ = transfer_packets_;
    transfer_acked_ = 0;
    transfer_active_ = true;
    on_complete_ = std::move(done);
    pump();
}

std::vector<std::pair<std::size_t, sim::Packet>> MptcpConnection::dispatch_packets(double now) {
    std::vector<std::pair<std::size_t, sim::Packet>> out;
    if (!transfer_active_ || app_packets_left_ <= 0) return out;

    std::vector<int> space(subflows_.size());
    std::int64_t total = 0;
    for (std::size_t i = 0; i < subflows_.size(); ++i) {
        space[i] = subflows_[i].window_space();
        total += space[i];
    }
    const int batch = static_cast<int>(std::min<std::int64_t>(total, app_packets_left_));
    if (batch <= 0) return out;

    const std::vector<int> counts = apportion(batch, schedule_, space);
    for (std::size_t i = 0; i < subflows_.size(); ++i) {
        auto& s = subflows_[i];
        for (int c = 0; c < counts[i]; ++c) {
            sim::Packet p;
            p.flow_id = flow_id_;
            p.subflow_id = static_cast<int>(i);
            p.seq = s.next_seq++;
            p.size = app_packets_left_ == 1 ? last_packet_size_ : options_.packet_size;
            p.sent_at = now;
            --app_packets_left_;
            s.outstanding.push_back(p.size);
            out.emplace_back(i, p);
        }
    }
    return out;
}

void MptcpConnection::pump() {
    for (std::size_t i = 0; i < subflows_.size(); ++i) {
        auto& s = subflows_[i];
        while (s.go_back && s.resend_next < s.next_seq && s.window_space() > 0) retransmit(i, s.resend_next++);
        if (s.go_back && s.resend_next >= s.next_seq) s.go_back = false;
    }
    for (const auto& [i, p] : dispatch_packets(sim_.now())) {
        transmit(i, p);
        if (std::isinf(subflows_[i].rto_deadline)) arm_timer(i);
    }
}

void MptcpConnection::transmit(std::size_t i, const sim::Packet& p) {
    auto& s = subflows_[i];
    ++s.packets_sent;
    ++s.slot.sent;
    net_.send_data(s.path_id, p);
}

void MptcpConnection::retransmit(std::size_t i, std::int64_t seq) {
    auto& s = subflows_[i];
    if (seq < s.snd_una || seq >= s.next_seq) return;
    sim::Packet p;
    p.flow_id = flow_id_;
    p.subflow_id = static_cast<int>(i);
    p.seq = seq;
    p.size = s.outstanding[static_cast<std::size_t>(seq - s.snd_una)];
    p.sent_at = sim_.now();
    p.retransmit = true;
    ++s.retransmissions;
    s.retransmitted.insert(seq);
    transmit(i, p);
}

void MptcpConnection::arm_timer(std::size_t i) {
    auto& s = subflows_[i];
    s.rto_deadline = sim_.now() + std::max(options_.min_rto, 4.0 * s.srtt);
    if (!s.timer_pending) {
        s.timer_pending = true;
        sim_.schedule(s.rto_deadline, [this, i] { on_timer(i); });
    }
}

void MptcpConnection::disarm_timer(std::size_t i) {
    subflows_[i].rto_deadline = std::numeric_limits<double>::infinity();
}

void MptcpConnection::on_timer(std::size_t i) {
    auto& s = subflows_[i];
    s.timer_pending = false;
    if (std::isinf(s.rto_deadline) || s.in_flight() == 0) return;
    if (sim_.now() < s.rto_deadline) {
        s.timer_pending = true;
        sim_.schedule(s.rto_deadline, [this, i] { on_timer(i); });
        return;
    }
    ++s.timeouts;
    on_loss(i, WindowEvent::Kind::Timeout);
    s.inflation = 0;
    s.partial_acks = 0;
    s.in_recovery = true;
    s.recover = s.next_seq;
    s.dupacks = 0;
    s.go_back = true;
    s.resend_next = s.snd_una;
    retransmit(i, s.resend_next++);
    arm_timer(i);
    pump();
}

void MptcpConnection::handle_data(const sim::Packet& p) {
    auto& s = subflows_.at(static_cast<std::size_t>(p.subflow_id));
    if (p.seq == s.rcv_next) {
        ++s.rcv_next;
        while (!s.out_of_order.empty() && *s.out_of_order.begin() == s.rcv_next) {
            s.out_of_order.erase(s.out_of_order.begin());
            ++s.rcv_next;
        }
    } else if (p.seq > s.rcv_next) {
        s.out_of_order.insert(p.seq);
    }
    sim::Packet ack;
    ack.flow_id = flow_id_;
    ack.subflow_id = p.subflow_id;
    ack.seq = s.rcv_next;
    ack.size = 40;
    ack.sent_at = sim_.now();
    ack.is_ack = true;
    ack.retransmit = p.retransmit;
    ack.echo_sent_at = p.sent_at;
    net_.send_ack(s.path_id, ack);
}

void MptcpConnection::update_rtt(SubflowState& s, double sample) {
    if (!(sample > 0.0)) return;
    s.srtt += (sample - s.srtt) / 8.0;
    s.min_rtt = std::min(s.min_rtt, sample);
}

void MptcpConnection::handle_ack(const sim::Packet& ack) {
    const auto i = static_cast<std::size_t>(ack.subflow_id);
    auto& s = subflows_.at(i);
    const double now = sim_.now();
    if (!ack.retransmit) update_rtt(s, now - ack.echo_sent_at);

    if (ack.seq > s.snd_una) {
        const std::int64_t n = ack.seq - s.snd_una;
        std::uint64_t bytes = 0;
        for (std::int64_t k = 0; k < n; ++k) {
            bytes += static_cast<std::uint64_t>(s.outstanding.front());
            s.outstanding.pop_front();
        }
        s.snd_una = ack.seq;
        s.retransmitted.erase(s.retransmitted.begin(), s.retransmitted.lower_bound(s.snd_una));
        s.packets_acked += static_cast<std::uint64_t>(n);
        s.bytes_acked += bytes;
        s.slot.delivered += static_cast<std::uint64_t>(n);
        s.rate.add(now, static_cast<double>(n), s.srtt);
        s.dupacks = 0;
        transfer_acked_ += n;

        const bool was_recovering = s.in_recovery;
        bool restart_timer = true;
        if (s.go_back) {
            s.resend_next = std::max(s.resend_next, s.snd_una);
            if (s.resend_next >= s.next_seq) s.go_back = false;
        }
        if (s.in_recovery) {
            if (s.snd_una >= s.recover) {
                s.in_recovery = false;
                s.inflation = 0;
                s.partial_acks = 0;
            } else if (!s.go_back) {
                s.inflation = std::max<std::int64_t>(0, s.inflation - n + 1);
                retransmit(i, s.snd_una);  // partial ACK: next hole
                restart_timer = s.partial_acks++ == 0;
            }
        }
        if (!was_recovering) on_newly_acked(i, n);

        if (s.in_flight() == 0) {
            disarm_timer(i);
        } else if (restart_timer || std::isinf(s.rto_deadline)) {
            arm_timer(i);
        }

        if (transfer_active_ && transfer_acked_ >= transfer_packets_ && app_packets_left_ == 0) {
            transfer_active_ = false;
            if (auto done = std::move(on_complete_)) {
                on_complete_ = {};
                done(now);
            }
        }
    } else if (ack.seq == s.snd_una && s.in_flight() > 0) {
        ++s.dupacks;
        if (s.in_recovery) {
            if (!s.go_back) ++s.inflation;
        } else if (s.dupacks == 3) {
            on_loss(i, WindowEvent::Kind::Loss);
            s.in_recovery = true;
            s.recover = s.next_seq;
            s.inflation = 3;
            s.partial_acks = 0;
            retransmit(i, s.snd_una);
            arm_timer(i);
        }
    }
    pump();
}

void MptcpConnection::on_newly_acked(std::size_t i, std::int64_t count) {
    auto& s = subflows_[i];
    const double before = s.cwnd;
    if (options_.inner_loop) {
        switch (options_.controller) {
            case ControllerKind::Lia:
            case ControllerKind::Hybrid: {
                std::vector<double> w = windows(), r = rtts();
                for (std::int64_t k = 0; k < count; ++k) {
                    s.cwnd += lia_increase(w, r, i);
                    w[i] = s.cwnd;
                }
                break;
            }
            case ControllerKind::SinglePathCubic:
                for (std::int64_t k = 0; k < count; ++k) s.cwnd = cubic_on_ack(s.cubic, s.cwnd, sim_.now(), s.srtt);
                break;
        }
    }
    emit(i, WindowEvent::Kind::Ack, count, before);
}

void MptcpConnection::on_loss(std::size_t i, WindowEvent::Kind kind) {
    auto& s = subflows_.at(i);
    const double before = s.cwnd;
    ++s.loss_events;
    if (options_.inner_loop) {
        switch (options_.controller) {
            case ControllerKind::Lia:
            case ControllerKind::Hybrid: s.cwnd = std::max(kMinWindow, s.cwnd / 2.0); break;
            case ControllerKind::SinglePathCubic: s.cwnd = cubic_on_loss(s.cubic, s.cwnd, sim_.now()); break;
        }
    }
    emit(i, kind, 0, before);
}

std::vector<SubflowSlotStats> MptcpConnection::close_slot(double /*now*/, double slot_length) {
    std::vector<SubflowSlotStats> out(subflows_.size());
    for (std::size_t i = 0; i < subflows_.size(); ++i) {
        auto& s = subflows_[i];
        out[i].sent_pps = static_cast<double>(s.slot.sent) / slot_length;
        out[i].delivered_pps = static_cast<double>(s.slot.delivered) / slot_length;
        out[i].srtt = s.srtt;
        out[i].cwnd = s.cwnd;
        out[i].cwnd_delta = s.cwnd - s.slot.cwnd_mark;
        out[i].schedule_share = schedule_[i];
        s.slot = SlotCounters{0, 0, s.cwnd};
    }
    return out;
}

void MptcpConnection::set_window_for_test(std::size_t i, double cwnd, std::optional<double> srtt) {
    auto& s = subflows_.at(i);
    s.cwnd = cwnd;
    s.slot.cwnd_mark = cwnd;
    if (srtt) {
        s.srtt = *srtt;
        s.min_rtt = *srtt;
    }
}

void MptcpConnection::emit(std::size_t i, WindowEvent::Kind kind, std::int64_t acked, double before) {
    if (trace_) trace_(WindowEvent{sim_.now(), i, kind, acked, before, subflows_[i].cwnd});
}

}  // namespace hmptcp::transport
