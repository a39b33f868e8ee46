#include <doctest.h>

#include <string>

#include "icsbed/tcp/segment.hpp"
#include "icsbed/tcp/stack.hpp"
#include "lan_fixture.hpp"

using namespace icsbed;
using namespace icsbed::tcp;
using icsbed::testing::host_ip;
using icsbed::testing::Lan;

namespace {

struct Pair {
    ConnectionPtr client;
    ConnectionPtr server;
};

Pair establish(Lan& lan, std::uint16_t port = 502)
{
    Pair p;
    lan.stack(1).listen(port, [&](ConnectionPtr c) { p.server = c; });
    lan.stack(0).connect(Endpoint{host_ip(12), port}, [&](ConnectionPtr c, ConnectError) { p.client = c; });
    lan.run_for(10ms);
    return p;
}

Bytes as_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

} // namespace

TEST_CASE("checksum of the reference segment matches scapy")
{
    // scapy: IP(src=.22,dst=.11,id=1,flags=DF)/TCP(sport=40000,dport=502,
    // seq=0x12345678,ack=0x9abcdef0,flags=PA)/modbus read request
    TcpSegment s;
    s.src_port = 40000;
    s.dst_port = 502;
    s.seq = 0x12345678;
    s.ack = 0x9ABCDEF0;
    s.flags = flags::PSH | flags::ACK;
    s.payload = Bytes{0x00, 0x01, 0x00, 0x00, 0x00, 0x06, 0x01, 0x03, 0x00, 0x00, 0x00, 0x02};
    const auto bytes = encode_segment(s, host_ip(22), host_ip(11));
    CHECK(get_u16(bytes, 16) == 0xACB2);
    CHECK(verify_tcp_checksum(host_ip(22), host_ip(11), bytes));

    net::Ipv4Header ip;
    ip.identification = 1;
    ip.src = host_ip(22);
    ip.dst = host_ip(11);
    const auto packet = net::encode_ipv4(ip, bytes);
    CHECK(get_u16(packet, 10) == 0xB951);
}

TEST_CASE("every encoded segment self-verifies and any single bit flip breaks it")
{
    Rng rng{11};
    for (int i = 0; i < 200; ++i) {
        TcpSegment s;
        s.src_port = static_cast<std::uint16_t>(rng.below(65536));
        s.dst_port = static_cast<std::uint16_t>(rng.below(65536));
        s.seq = rng.next_u32();
        s.ack = rng.next_u32();
        s.flags = static_cast<std::uint8_t>(rng.below(32));
        s.payload.resize(rng.below(40));
        for (auto& b : s.payload) b = static_cast<std::uint8_t>(rng.below(256));
        const auto src = net::Ipv4Addr{rng.next_u32()};
        const auto dst = net::Ipv4Addr{rng.next_u32()};
        auto bytes = encode_segment(s, src, dst);
        REQUIRE(verify_tcp_checksum(src, dst, bytes));
        auto decoded = decode_segment(bytes);
        decoded.checksum = 0;
        s.checksum = 0;
        REQUIRE(decoded == s);

        for (std::size_t byte = 0; byte < bytes.size(); ++byte) {
            for (int bit = 0; bit < 8; ++bit) {
                auto flipped = bytes;
                flipped[byte] ^= static_cast<std::uint8_t>(1 << bit);
                REQUIRE_FALSE(verify_tcp_checksum(src, dst, flipped));
            }
        }
    }
}

TEST_CASE("handshake to a listening port establishes both ends")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    REQUIRE(p.client);
    REQUIRE(p.server);
    CHECK(p.client->state() == TcpState::Established);
    CHECK(p.server->state() == TcpState::Established);
    CHECK(p.client->rcv_nxt() == p.server->iss() + 1);
    CHECK(p.server->rcv_nxt() == p.client->iss() + 1);
    CHECK(p.client->iss() != p.server->iss());
}

TEST_CASE("connect to a closed port is refused with RST")
{
    Lan lan{11, 12};
    ConnectError err = ConnectError::None;
    bool called = false;
    lan.stack(0).connect(Endpoint{host_ip(12), 503}, [&](ConnectionPtr c, ConnectError e) {
        called = true;
        err = e;
        CHECK_FALSE(c);
    });
    lan.run_for(10ms);
    CHECK(called);
    CHECK(err == ConnectError::Refused);
    CHECK(lan.stack(1).stats().rst_sent == 1);
}

TEST_CASE("connect to an absent host fails after ARP timeout")
{
    Lan lan{11, 12};
    ConnectError err = ConnectError::None;
    lan.stack(0).connect(Endpoint{host_ip(99), 502}, [&](ConnectionPtr, ConnectError e) { err = e; });
    lan.run_for(1100ms);
    CHECK(err == ConnectError::Unreachable);
}

TEST_CASE("ISNs are fixed by the seed and vary across seeds")
{
    auto isns = [](std::uint64_t seed) {
        Lan lan{11, 12};
        // rebuild stacks with the requested seed
        lan.stacks.clear();
        for (std::size_t i = 0; i < 2; ++i) {
            lan.stacks.push_back(std::make_unique<TcpStack>(lan.events, lan.nic(i),
                                                            derive_stream(seed, "isn/" + lan.nic(i).name())));
        }
        auto p = establish(lan);
        return std::pair{p.client->iss(), p.server->iss()};
    };
    CHECK(isns(3) == isns(3));
    CHECK(isns(3) != isns(4));
}

TEST_CASE("stream is delivered in order and snd_nxt advances by payload length")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    const auto before = p.client->snd_nxt();
    p.client->send(as_bytes("AB"));
    p.client->send(as_bytes("CD"));
    lan.run_for(5ms);
    const auto got = p.server->read();
    CHECK(std::string(got.begin(), got.end()) == "ABCD");
    CHECK(p.client->snd_nxt() == before + 4);
}

TEST_CASE("send on a closed connection is an error")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    p.client->close();
    lan.run_for(10ms);
    CHECK(p.client->state() == TcpState::Closed);
    CHECK(p.server->state() == TcpState::Closed);
    CHECK_THROWS_AS(p.client->send(as_bytes("X")), std::logic_error);
}

namespace {

// Builds a raw IPv4/TCP frame on the client's behalf.
net::EthernetFrame forge(Lan& lan, const ConnectionPtr& from, std::uint32_t seq, Bytes payload, bool corrupt = false)
{
    TcpSegment s;
    s.src_port = from->local().port;
    s.dst_port = from->remote().port;
    s.seq = seq;
    s.ack = from->rcv_nxt();
    s.flags = flags::ACK | flags::PSH;
    s.payload = std::move(payload);
    auto tcp_bytes = encode_segment(s, from->local().ip, from->remote().ip);
    if (corrupt) {
        tcp_bytes.back() ^= 0x01;
    }
    net::Ipv4Header ip;
    ip.src = from->local().ip;
    ip.dst = from->remote().ip;
    return net::EthernetFrame{lan.nic(1).mac(), lan.nic(0).mac(), net::kEtherTypeIpv4, net::encode_ipv4(ip, tcp_bytes)};
}

} // namespace

TEST_CASE("duplicate sequence numbers are rejected")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    const auto seq0 = p.client->snd_nxt();
    p.client->send(as_bytes("AB"));
    lan.run_for(5ms);
    // Replay "AB" verbatim at its original sequence number.
    lan.nic(0).send_frame(forge(lan, p.client, seq0, as_bytes("AB")));
    lan.run_for(5ms);
    const auto got = p.server->read();
    CHECK(std::string(got.begin(), got.end()) == "AB");
    CHECK(p.server->stats().rejected_duplicate == 1);
}

TEST_CASE("segment with a stale checksum is dropped")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    lan.nic(0).send_frame(forge(lan, p.client, p.client->snd_nxt(), as_bytes("ZZ"), true));
    lan.run_for(5ms);
    CHECK(p.server->read().empty());
    CHECK(lan.stack(1).stats().bad_checksum == 1);
}

TEST_CASE("segments ahead of rcv_nxt wait for the gap")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    const auto seq = p.client->snd_nxt();
    lan.nic(0).send_frame(forge(lan, p.client, seq + 2, as_bytes("CD")));
    lan.run_for(1ms);
    CHECK(p.server->read().empty());
    lan.nic(0).send_frame(forge(lan, p.client, seq, as_bytes("AB")));
    lan.run_for(1ms);
    const auto got = p.server->read();
    CHECK(std::string(got.begin(), got.end()) == "ABCD");
}

TEST_CASE("stream fidelity and replay rejection over random payloads")
{
    Rng rng{77};
    for (int trial = 0; trial < 10; ++trial) {
        Lan lan{11, 12, 41};
        auto p = establish(lan);
        Bytes sent;
        std::vector<std::pair<std::uint32_t, Bytes>> history;
        const int n = 1 + static_cast<int>(rng.below(30));
        for (int i = 0; i < n; ++i) {
            Bytes chunk(1 + rng.below(300));
            for (auto& b : chunk) b = static_cast<std::uint8_t>(rng.below(256));
            history.emplace_back(p.client->snd_nxt(), chunk);
            p.client->send(chunk);
            sent.insert(sent.end(), chunk.begin(), chunk.end());
            lan.run_for(Duration{static_cast<std::int64_t>(rng.below(500))});
        }
        lan.run_for(5ms);
        const auto got = p.server->read();
        REQUIRE(got == sent);
        // Re-inject every previously delivered segment: nothing changes.
        for (const auto& [seq, chunk] : history) {
            lan.nic(0).send_frame(forge(lan, p.client, seq, chunk));
        }
        lan.run_for(5ms);
        CHECK(p.server->read().empty());
        CHECK(p.server->stats().rejected_duplicate == history.size());
    }
}

TEST_CASE("large payloads are segmented at the MSS")
{
    Lan lan{11, 12};
    auto p = establish(lan);
    Bytes big(4000, 0x5A);
    p.client->send(big);
    lan.run_for(5ms);
    CHECK(p.server->read() == big);
}
