#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hmptcp::sim {

inline constexpr int kDefaultPacketBytes = 1500;

struct Packet {
    int flow_id = 0;
    int subflow_id = 0;
    /// Data: subflow sequence number. ACK: cumulative next-expected sequence.
    std::int64_t seq = 0;
    int size = kDefaultPacketBytes;
    double sent_at = 0.0;
    bool is_ack = false;
    /// Set on retransmitted data and echoed on the ACK it triggers (Karn's rule).
    bool retransmit = false;
    /// ACK only: send time of the data packet that triggered it.
    double echo_sent_at = 0.0;
};

/// Append-only record of packet events. Every line is hashed (FNV-1a) and the
/// text is optionally retained, so two runs can be compared byte for byte.
class PacketLog {
public:
    explicit PacketLog(bool keep_text = false) : keep_text_(keep_text) {}

    void record(char event, double t, const Packet& p, int path_id);

    std::uint64_t hash() const { return hash_; }
    std::uint64_t lines() const { return lines_; }
    const std::string& text() const { return text_; }

private:
    void absorb(std::string_view s);

    bool keep_text_;
    std::string text_;
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
    std::uint64_t lines_ = 0;
};

}  // namespace hmptcp::sim
