#include "icsbed/net/frame.hpp"

#include <algorithm>

namespace icsbed::net {

namespace {

void put_mac(Bytes& out, const MacAddr& mac) { out.insert(out.end(), mac.octets.begin(), mac.octets.end()); }

MacAddr get_mac(ByteView b, std::size_t off)
{
    MacAddr mac;
    std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(off), 6, mac.octets.begin());
    return mac;
}

} // namespace

Bytes encode_frame(const EthernetFrame& frame)
{
    Bytes out;
    out.reserve(frame.wire_size());
    put_mac(out, frame.dst);
    put_mac(out, frame.src);
    put_u16(out, frame.ethertype);
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

EthernetFrame decode_frame(ByteView bytes)
{
    if (bytes.size() < kEthernetHeaderLen) {
        throw DecodeError("ethernet frame shorter than 14 bytes");
    }
    EthernetFrame f;
    f.dst = get_mac(bytes, 0);
    f.src = get_mac(bytes, 6);
    f.ethertype = get_u16(bytes, 12);
    if (f.ethertype != kEtherTypeArp && f.ethertype != kEtherTypeIpv4) {
        throw DecodeError("unsupported ethertype");
    }
    f.payload.assign(bytes.begin() + kEthernetHeaderLen, bytes.end());
    return f;
}

Bytes encode_arp(const ArpPacket& p)
{
    Bytes out;
    out.reserve(kArpLen);
    put_u16(out, 1);
    put_u16(out, kEtherTypeIpv4);
    put_u8(out, 6);
    put_u8(out, 4);
    put_u16(out, static_cast<std::uint16_t>(p.oper));
    put_mac(out, p.sha);
    put_u32(out, p.spa.value);
    put_mac(out, p.tha);
    put_u32(out, p.tpa.value);
    return out;
}

ArpPacket decode_arp(ByteView bytes)
{
    if (bytes.size() < kArpLen) {
        throw DecodeError("ARP packet shorter than 28 bytes");
    }
    if (get_u16(bytes, 0) != 1) {
        throw DecodeError("ARP htype is not Ethernet");
    }
    if (get_u16(bytes, 2) != kEtherTypeIpv4) {
        throw DecodeError("ARP ptype is not IPv4");
    }
    if (bytes[4] != 6 || bytes[5] != 4) {
        throw DecodeError("ARP address lengths are not 6/4");
    }
    const auto op = get_u16(bytes, 6);
    if (op != 1 && op != 2) {
        throw DecodeError("unknown ARP opcode");
    }
    ArpPacket p;
    p.oper = static_cast<ArpOp>(op);
    p.sha = get_mac(bytes, 8);
    p.spa = Ipv4Addr{get_u32(bytes, 14)};
    p.tha = get_mac(bytes, 18);
    p.tpa = Ipv4Addr{get_u32(bytes, 24)};
    return p;
}

std::uint16_t ones_complement_sum(ByteView bytes, std::uint32_t initial)
{
    std::uint64_t sum = initial;
    std::size_t i = 0;
    for (; i + 1 < bytes.size(); i += 2) {
        sum += static_cast<std::uint32_t>((bytes[i] << 8) | bytes[i + 1]);
    }
    if (i < bytes.size()) {
        sum += static_cast<std::uint32_t>(bytes[i] << 8);
    }
    while (sum >> 16) {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    return static_cast<std::uint16_t>(sum);
}

Bytes encode_ipv4(Ipv4Header h, ByteView payload)
{
    Bytes out;
    out.reserve(kIpv4HeaderLen + payload.size());
    h.total_length = static_cast<std::uint16_t>(kIpv4HeaderLen + payload.size());
    put_u8(out, 0x45);
    put_u8(out, h.tos);
    put_u16(out, h.total_length);
    put_u16(out, h.identification);
    put_u16(out, h.flags_fragment);
    put_u8(out, h.ttl);
    put_u8(out, h.protocol);
    put_u16(out, 0);
    put_u32(out, h.src.value);
    put_u32(out, h.dst.value);
    set_u16(out, 10, internet_checksum(ByteView(out.data(), kIpv4HeaderLen)));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Ipv4Packet decode_ipv4(ByteView bytes)
{
    if (bytes.size() < kIpv4HeaderLen) {
        throw DecodeError("IPv4 packet shorter than 20 bytes");
    }
    if (bytes[0] != 0x45) {
        throw DecodeError("IPv4 version/IHL is not 4/5");
    }
    Ipv4Packet p;
    p.header.tos = bytes[1];
    p.header.total_length = get_u16(bytes, 2);
    p.header.identification = get_u16(bytes, 4);
    p.header.flags_fragment = get_u16(bytes, 6);
    p.header.ttl = bytes[8];
    p.header.protocol = bytes[9];
    p.header.checksum = get_u16(bytes, 10);
    p.header.src = Ipv4Addr{get_u32(bytes, 12)};
    p.header.dst = Ipv4Addr{get_u32(bytes, 16)};
    if (p.header.total_length < kIpv4HeaderLen || p.header.total_length > bytes.size()) {
        throw DecodeError("IPv4 total length inconsistent with buffer");
    }
    if (ones_complement_sum(bytes.first(kIpv4HeaderLen)) != 0xFFFF) {
        throw DecodeError("IPv4 header checksum mismatch");
    }
    p.payload = bytes.subspan(kIpv4HeaderLen, p.header.total_length - kIpv4HeaderLen);
    return p;
}

} // namespace icsbed::net
