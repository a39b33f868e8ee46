#pragma once

#include <cstdint>

#include "icsbed/net/addr.hpp"
#include "icsbed/net/bytes.hpp"

namespace icsbed::tcp {

using net::Ipv4Addr;

namespace flags {
inline constexpr std::uint8_t FIN = 0x01;
inline constexpr std::uint8_t SYN = 0x02;
inline constexpr std::uint8_t RST = 0x04;
inline constexpr std::uint8_t PSH = 0x08;
inline constexpr std::uint8_t ACK = 0x10;
} // namespace flags

inline constexpr std::size_t kTcpHeaderLen = 20;
inline constexpr std::uint16_t kWindow = 65535;

/// Option-less TCP segment (data offset 5).
struct TcpSegment {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = kWindow;
    std::uint16_t checksum = 0;
    Bytes payload;

    bool has(std::uint8_t f) const { return (flags & f) != 0; }
    /// Sequence space consumed: payload bytes plus one each for SYN and FIN.
    std::uint32_t seq_len() const
    {
        return static_cast<std::uint32_t>(payload.size()) + (has(flags::SYN) ? 1u : 0u) + (has(flags::FIN) ? 1u : 0u);
    }
    bool operator==(const TcpSegment&) const = default;
};

/// Internet checksum over the IPv4 pseudo-header (src, dst, zero, protocol 6,
/// TCP length) followed by `tcp_bytes`. The checksum field inside
/// `tcp_bytes` must be zero.
std::uint16_t tcp_checksum(Ipv4Addr src, Ipv4Addr dst, ByteView tcp_bytes);

/// True when the ones'-complement sum over pseudo-header + segment
/// (checksum field included) is 0xFFFF.
bool verify_tcp_checksum(Ipv4Addr src, Ipv4Addr dst, ByteView tcp_bytes);

/// Serializes the segment and fills in its checksum (the `checksum` member
/// of the argument is ignored).
Bytes encode_segment(const TcpSegment& segment, Ipv4Addr src, Ipv4Addr dst);

/// Parses header fields and payload; does not verify the checksum.
/// Throws DecodeError on truncation or a data offset other than 5.
TcpSegment decode_segment(ByteView tcp_bytes);

/// Recomputes the checksum of an already-serialized segment in place.
void refresh_checksum(Bytes& tcp_bytes, Ipv4Addr src, Ipv4Addr dst);

} // namespace icsbed::tcp
