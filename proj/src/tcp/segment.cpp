#include "icsbed/tcp/segment.hpp"

#include "icsbed/net/frame.hpp"

namespace icsbed::tcp {

namespace {

std::uint32_t pseudo_header_sum(Ipv4Addr src, Ipv4Addr dst, std::size_t tcp_len)
{
    std::uint32_t sum = 0;
    sum += src.value >> 16;
    sum += src.value & 0xFFFF;
    sum += dst.value >> 16;
    sum += dst.value & 0xFFFF;
    sum += net::kIpProtoTcp;
    sum += static_cast<std::uint32_t>(tcp_len);
    return sum;
}

} // namespace

std::uint16_t tcp_checksum(Ipv4Addr src, Ipv4Addr dst, ByteView tcp_bytes)
{
    return static_cast<std::uint16_t>(~net::ones_complement_sum(tcp_bytes, pseudo_header_sum(src, dst, tcp_bytes.size())));
}

bool verify_tcp_checksum(Ipv4Addr src, Ipv4Addr dst, ByteView tcp_bytes)
{
    return net::ones_complement_sum(tcp_bytes, pseudo_header_sum(src, dst, tcp_bytes.size())) == 0xFFFF;
}

Bytes encode_segment(const TcpSegment& s, Ipv4Addr src, Ipv4Addr dst)
{
    Bytes out;
    out.reserve(kTcpHeaderLen + s.payload.size());
    put_u16(out, s.src_port);
    put_u16(out, s.dst_port);
    put_u32(out, s.seq);
    put_u32(out, s.ack);
    put_u8(out, 5 << 4);
    put_u8(out, s.flags);
    put_u16(out, s.window);
    put_u16(out, 0);
    put_u16(out, 0); // urgent pointer
    out.insert(out.end(), s.payload.begin(), s.payload.end());
    set_u16(out, 16, tcp_checksum(src, dst, out));
    return out;
}

TcpSegment decode_segment(ByteView b)
{
    if (b.size() < kTcpHeaderLen) {
        throw DecodeError("TCP segment shorter than 20 bytes");
    }
    if ((b[12] >> 4) != 5) {
        throw DecodeError("TCP options are not supported");
    }
    TcpSegment s;
    s.src_port = get_u16(b, 0);
    s.dst_port = get_u16(b, 2);
    s.seq = get_u32(b, 4);
    s.ack = get_u32(b, 8);
    s.flags = b[13];
    s.window = get_u16(b, 14);
    s.checksum = get_u16(b, 16);
    s.payload.assign(b.begin() + kTcpHeaderLen, b.end());
    return s;
}

void refresh_checksum(Bytes& tcp_bytes, Ipv4Addr src, Ipv4Addr dst)
{
    set_u16(tcp_bytes, 16, 0);
    set_u16(tcp_bytes, 16, tcp_checksum(src, dst, tcp_bytes));
}

} // namespace icsbed::tcp
