#pragma once

#include <cstdint>

#include "icsbed/net/addr.hpp"
#include "icsbed/net/bytes.hpp"

namespace icsbed::net {

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::uint16_t kEtherTypeArp = 0x0806;
inline constexpr std::size_t kEthernetHeaderLen = 14;

struct EthernetFrame {
    MacAddr dst;
    MacAddr src;
    std::uint16_t ethertype = kEtherTypeIpv4;
    Bytes payload;

    std::size_t wire_size() const { return kEthernetHeaderLen + payload.size(); }
    bool operator==(const EthernetFrame&) const = default;
};

Bytes encode_frame(const EthernetFrame& frame);
/// Throws DecodeError on short input or an ethertype outside {ARP, IPv4}.
EthernetFrame decode_frame(ByteView bytes);

enum class ArpOp : std::uint16_t { Request = 1, Reply = 2 };

/// Ethernet/IPv4 ARP (htype 1, ptype 0x0800, hlen 6, plen 4).
struct ArpPacket {
    ArpOp oper = ArpOp::Request;
    MacAddr sha;
    Ipv4Addr spa;
    MacAddr tha;
    Ipv4Addr tpa;

    static ArpPacket request(MacAddr sha, Ipv4Addr spa, Ipv4Addr tpa) { return {ArpOp::Request, sha, spa, MacAddr::zero(), tpa}; }
    static ArpPacket reply(MacAddr sha, Ipv4Addr spa, MacAddr tha, Ipv4Addr tpa) { return {ArpOp::Reply, sha, spa, tha, tpa}; }

    bool operator==(const ArpPacket&) const = default;
};

inline constexpr std::size_t kArpLen = 28;

Bytes encode_arp(const ArpPacket& p);
/// Throws DecodeError on short buffers, htype != 1, ptype != 0x0800, bad
/// hlen/plen or an unknown opcode.
ArpPacket decode_arp(ByteView bytes);

/// Ones'-complement sum of big-endian 16-bit words, folded, not complemented.
/// Odd-length input is zero-padded. `initial` lets callers chain sums.
std::uint16_t ones_complement_sum(ByteView bytes, std::uint32_t initial = 0);

/// RFC 1071 Internet checksum: complement of ones_complement_sum.
inline std::uint16_t internet_checksum(ByteView bytes) { return static_cast<std::uint16_t>(~ones_complement_sum(bytes)); }

inline constexpr std::uint8_t kIpProtoTcp = 6;
inline constexpr std::size_t kIpv4HeaderLen = 20;

/// Option-less IPv4 header (IHL 5).
struct Ipv4Header {
    std::uint8_t tos = 0;
    std::uint16_t total_length = 0;
    std::uint16_t identification = 0;
    std::uint16_t flags_fragment = 0x4000; // DF
    std::uint8_t ttl = 64;
    std::uint8_t protocol = kIpProtoTcp;
    std::uint16_t checksum = 0;
    Ipv4Addr src;
    Ipv4Addr dst;

    bool operator==(const Ipv4Header&) const = default;
};

/// Serializes header + payload, filling total_length and the header checksum.
Bytes encode_ipv4(Ipv4Header header, ByteView payload);

struct Ipv4Packet {
    Ipv4Header header;
    ByteView payload; // view into the decoded buffer
};

/// Throws DecodeError on version/IHL mismatch, truncation or a bad header checksum.
Ipv4Packet decode_ipv4(ByteView bytes);

} // namespace icsbed::net
