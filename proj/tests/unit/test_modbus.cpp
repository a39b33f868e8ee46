#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "icsbed/modbus/client.hpp"
#include "icsbed/modbus/codec.hpp"
#include "icsbed/modbus/register_file.hpp"
#include "icsbed/modbus/server.hpp"
#include "icsbed/modbus/wide_value.hpp"
#include "lan_fixture.hpp"

using namespace icsbed;
using namespace icsbed::modbus;
using icsbed::testing::host_ip;
using icsbed::testing::Lan;

namespace {

Bytes hex(std::string_view s)
{
    Bytes out;
    unsigned v = 0;
    int n = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else continue;
        v = v * 16 + static_cast<unsigned>(d);
        if (++n == 2) {
            out.push_back(static_cast<std::uint8_t>(v));
            v = 0;
            n = 0;
        }
    }
    return out;
}

Adu random_adu(Rng& rng, Direction& dir)
{
    Adu a;
    a.transaction_id = static_cast<std::uint16_t>(rng.below(65536));
    a.unit_id = static_cast<std::uint8_t>(rng.below(256));
    auto values = [&](std::size_t max) {
        std::vector<std::uint16_t> v(1 + rng.below(max));
        for (auto& x : v) x = static_cast<std::uint16_t>(rng.below(65536));
        return v;
    };
    switch (rng.below(5)) {
    case 0:
        a.pdu = ReadHoldingRequest{static_cast<std::uint16_t>(rng.below(65536)),
                                   static_cast<std::uint16_t>(1 + rng.below(125))};
        dir = Direction::Request;
        break;
    case 1:
        a.pdu = ReadHoldingResponse{values(125)};
        dir = Direction::Response;
        break;
    case 2:
        a.pdu = WriteMultipleRequest{static_cast<std::uint16_t>(rng.below(65536)), values(123)};
        dir = Direction::Request;
        break;
    case 3:
        a.pdu = WriteMultipleResponse{static_cast<std::uint16_t>(rng.below(65536)),
                                      static_cast<std::uint16_t>(1 + rng.below(123))};
        dir = Direction::Response;
        break;
    default:
        a.pdu = ExceptionResponse{rng.below(2) ? kReadHoldingRegisters : kWriteMultipleRegisters,
                                  static_cast<ExceptionCode>(1 + rng.below(3))};
        dir = Direction::Response;
    }
    return a;
}

} // namespace

TEST_CASE("ADU encodings match pymodbus reference frames")
{
    CHECK(encode_adu(Adu{1, 1, ReadHoldingRequest{0, 2}}) == hex("0001 0000 0006 01 03 0000 0002"));
    CHECK(encode_adu(Adu{1, 1, ReadHoldingResponse{{0x3F80, 0x0000}}}) == hex("0001 0000 0007 01 03 04 3f80 0000"));
    CHECK(encode_adu(Adu{1, 1, ExceptionResponse{0x03, ExceptionCode::IllegalDataAddress}}) ==
          hex("0001 0000 0003 01 83 02"));
    CHECK(encode_adu(Adu{7, 1, WriteMultipleRequest{6, {0x41C8, 0x0000}}}) ==
          hex("0007 0000 000b 01 10 0006 0002 04 41c8 0000"));
    CHECK(encode_adu(Adu{7, 1, WriteMultipleResponse{6, 2}}) == hex("0007 0000 0006 01 10 0006 0002"));
}

TEST_CASE("encode rejects quantities outside the protocol limits")
{
    CHECK_THROWS_AS(encode_adu(Adu{1, 1, ReadHoldingRequest{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(encode_adu(Adu{1, 1, ReadHoldingRequest{0, 126}}), std::invalid_argument);
    CHECK_NOTHROW(encode_adu(Adu{1, 1, ReadHoldingRequest{0, 125}}));
    CHECK_THROWS_AS(encode_adu(Adu{1, 1, WriteMultipleRequest{0, {}}}), std::invalid_argument);
    CHECK_THROWS_AS(encode_adu(Adu{1, 1, WriteMultipleRequest{0, std::vector<std::uint16_t>(124)}}),
                    std::invalid_argument);
    CHECK_NOTHROW(encode_adu(Adu{1, 1, WriteMultipleRequest{0, std::vector<std::uint16_t>(123)}}));
}

TEST_CASE("decode(encode(x)) == x over random valid ADUs")
{
    Rng rng{314};
    for (int i = 0; i < 5000; ++i) {
        Direction dir{};
        const auto adu = random_adu(rng, dir);
        const auto bytes = encode_adu(adu);
        const auto r = decode_adu(bytes, dir);
        REQUIRE(r.ok());
        REQUIRE(r.consumed == bytes.size());
        REQUIRE(r.adu == adu);
        REQUIRE(get_u16(bytes, 4) == bytes.size() - 6);
    }
}

TEST_CASE("decoder never throws on arbitrary bytes")
{
    Rng rng{2718};
    int ok = 0;
    for (int i = 0; i < 20000; ++i) {
        Bytes junk(rng.below(40));
        for (auto& b : junk) b = static_cast<std::uint8_t>(rng.below(256));
        if (junk.size() >= 4 && rng.below(2)) {
            junk[2] = 0;
            junk[3] = 0;
        }
        for (auto dir : {Direction::Request, Direction::Response}) {
            DecodeResult r;
            REQUIRE_NOTHROW(r = decode_adu(junk, dir));
            if (r.ok()) {
                ++ok;
                REQUIRE(r.consumed <= junk.size());
            }
        }
    }
    // Mutations of valid frames exercise deeper paths.
    for (int i = 0; i < 20000; ++i) {
        Direction dir{};
        auto bytes = encode_adu(random_adu(rng, dir));
        const auto flips = 1 + rng.below(4);
        for (std::size_t k = 0; k < flips; ++k) {
            bytes[rng.below(bytes.size())] = static_cast<std::uint8_t>(rng.below(256));
        }
        if (rng.below(4) == 0) bytes.resize(rng.below(bytes.size() + 1));
        REQUIRE_NOTHROW((void)decode_adu(bytes, dir));
    }
}

TEST_CASE("framing errors carry the exception a server should answer with")
{
    auto r = decode_adu(hex("0005 0000 0006 01 05 0000 ff00"), Direction::Request);
    CHECK(r.status == DecodeResult::Status::Error);
    REQUIRE(r.suggested_exception);
    CHECK(*r.suggested_exception == ExceptionCode::IllegalFunction);

    r = decode_adu(hex("0005 0000 0006 01 03 0000 0000"), Direction::Request);
    REQUIRE(r.suggested_exception);
    CHECK(*r.suggested_exception == ExceptionCode::IllegalDataValue);

    r = decode_adu(hex("0005 0001 0006 01 03 0000 0001"), Direction::Request);
    CHECK(r.status == DecodeResult::Status::Error);
    CHECK_FALSE(r.suggested_exception);

    r = decode_adu(hex("0005 0000 0006 01 03 0000"), Direction::Request);
    CHECK(r.status == DecodeResult::Status::NeedMore);
}

TEST_CASE("float register encoding matches IEEE-754 big-endian")
{
    auto bits = [](float x) {
        const auto r = float_to_regs(x);
        return (static_cast<std::uint32_t>(r[0]) << 16) | r[1];
    };
    CHECK(bits(1.0f) == 0x3F800000u);
    CHECK(bits(25.0f) == 0x41C80000u);
    CHECK(bits(-2.5f) == 0xC0200000u);
    CHECK(bits(0.1f) == 0x3DCCCCCDu);
    CHECK(bits(1.5f) == 0x3FC00000u);

    Rng rng{8};
    for (int i = 0; i < 10000; ++i) {
        const auto u = rng.next_u32();
        const float f = std::bit_cast<float>(u);
        if (std::isnan(f)) continue;
        REQUIRE(std::bit_cast<std::uint32_t>(regs_to_float(float_to_regs(f))) == u);
    }
    CHECK(std::isnan(regs_to_float(float_to_regs(std::numeric_limits<float>::quiet_NaN()))));
}

TEST_CASE("register file maps, protects and rejects atomically")
{
    RegisterFile rf;
    rf.map_range(0, 4, true);
    rf.map_range(4, 2, false);

    auto v = rf.read(0, 6);
    REQUIRE(std::holds_alternative<std::vector<std::uint16_t>>(v));
    CHECK(std::get<0>(v).size() == 6);

    CHECK(std::get<ExceptionCode>(rf.read(5, 2)) == ExceptionCode::IllegalDataAddress);
    CHECK(std::get<ExceptionCode>(rf.read(0, 126)) == ExceptionCode::IllegalDataValue);

    CHECK_FALSE(rf.write(0, {1, 2}));
    CHECK(rf.load(1) == 2);
    // straddles into read-only: nothing written
    CHECK(rf.write(2, {7, 7, 7}) == ExceptionCode::IllegalDataAddress);
    CHECK(rf.load(2) == 0);
    CHECK(rf.write(100, {1}) == ExceptionCode::IllegalDataAddress);

    const std::uint16_t dev[] = {9, 9};
    rf.store(4, dev);
    CHECK(rf.load(5) == 9);
    CHECK_THROWS_AS(rf.store(6, dev), std::out_of_range);
}

TEST_CASE("server_handle answers reads, writes and bad requests")
{
    RegisterFile rf;
    rf.map_range(0, 10, true);

    auto resp = server_handle(rf, Adu{42, 1, WriteMultipleRequest{2, {5, 6}}});
    CHECK(resp.transaction_id == 42);
    CHECK(std::get<WriteMultipleResponse>(resp.pdu) == WriteMultipleResponse{2, 2});

    resp = server_handle(rf, Adu{43, 1, ReadHoldingRequest{2, 2}});
    CHECK(std::get<ReadHoldingResponse>(resp.pdu).values == std::vector<std::uint16_t>{5, 6});

    resp = server_handle(rf, Adu{44, 1, ReadHoldingRequest{9, 2}});
    const auto ex = std::get<ExceptionResponse>(resp.pdu);
    CHECK(ex.function == kReadHoldingRegisters);
    CHECK(ex.code == ExceptionCode::IllegalDataAddress);
    CHECK(encode_adu(resp)[7] == 0x83);
}

TEST_CASE("read after write returns the written values (register file property)")
{
    Rng rng{55};
    for (int i = 0; i < 500; ++i) {
        RegisterFile rf;
        rf.map_range(0, 50, true);
        const auto start = static_cast<std::uint16_t>(rng.below(40));
        std::vector<std::uint16_t> vals(1 + rng.below(50 - start));
        for (auto& x : vals) x = static_cast<std::uint16_t>(rng.below(65536));
        const auto before = std::get<0>(rf.read(0, 50));
        REQUIRE_FALSE(rf.write(start, vals));
        const auto after = std::get<0>(rf.read(0, 50));
        for (std::size_t a = 0; a < 50; ++a) {
            if (a >= start && a < start + vals.size()) {
                REQUIRE(after[a] == vals[a - start]);
            } else {
                REQUIRE(after[a] == before[a]);
            }
        }
        // reads do not mutate
        REQUIRE(std::get<0>(rf.read(0, 50)) == after);
    }
}

namespace {

/// A server that answers immediately from a register file.
struct EchoServer {
    RegisterFile regs;
    std::unique_ptr<ModbusServer> server;

    explicit EchoServer(tcp::TcpStack& stack)
    {
        regs.map_range(0, 16, true);
        server = std::make_unique<ModbusServer>(stack, kPort, [this](IncomingRequest req) {
            if (auto* adu = std::get_if<Adu>(&req.body)) {
                this->server->respond(req.conn, server_handle(regs, *adu));
            } else {
                this->server->respond(req.conn, Adu{req.transaction_id, req.unit_id, std::get<ExceptionResponse>(req.body)});
            }
        });
    }
};

} // namespace

TEST_CASE("client and server exchange reads and writes over the simulated LAN")
{
    Lan lan{11, 22};
    EchoServer srv{lan.stack(0)};
    ModbusClient client{lan.stack(1), tcp::Endpoint{host_ip(11), kPort}};

    std::vector<std::uint16_t> txids;
    client.set_rtt_observer([&](const RttSample& s) { txids.push_back(s.transaction_id); });

    ClientResult w, r, bad;
    const auto f = float_to_regs(25.0f);
    client.write(6, {f[0], f[1]}, [&](const ClientResult& x) { w = x; });
    client.read(6, 2, [&](const ClientResult& x) { r = x; });
    client.read(15, 2, [&](const ClientResult& x) { bad = x; });
    lan.run_for(50ms);

    CHECK(w.ok());
    REQUIRE(r.ok());
    CHECK(regs_to_float(r.values) == 25.0f);
    CHECK(bad.error == ClientError::Exception);
    CHECK(bad.exception == ExceptionCode::IllegalDataAddress);
    CHECK(txids == std::vector<std::uint16_t>{1, 2, 3});
    CHECK(r.rtt > Duration{0});
    CHECK(srv.server->stats().requests == 3);
}

TEST_CASE("unknown function codes get exception 0x01")
{
    Lan lan{11, 22};
    EchoServer srv{lan.stack(0)};
    ModbusClient client{lan.stack(1), tcp::Endpoint{host_ip(11), kPort}};
    ClientResult res;
    client.send_raw(hex("0009 0000 0006 01 05 0000 ff00"), [&](const ClientResult& x) { res = x; });
    lan.run_for(50ms);
    CHECK(res.error == ClientError::Exception);
    CHECK(res.exception == ExceptionCode::IllegalFunction);
    CHECK(res.transaction_id == 9);
}

TEST_CASE("client times out against a silent server and reconnects")
{
    Lan lan{11, 22};
    std::vector<IncomingRequest> swallowed;
    ModbusServer silent{lan.stack(0), kPort, [&](IncomingRequest r) { swallowed.push_back(std::move(r)); }};
    ModbusClient client{lan.stack(1), tcp::Endpoint{host_ip(11), kPort}};
    ClientResult res;
    client.read(0, 1, [&](const ClientResult& x) { res = x; });
    lan.run_for(999ms);
    CHECK(res.error == ClientError::None);
    CHECK(client.in_flight() == 1);
    lan.run_for(10ms);
    CHECK(res.error == ClientError::Timeout);
    CHECK_FALSE(client.connected());

    client.read(0, 1, [&](const ClientResult& x) { res = x; });
    lan.run_for(10ms);
    CHECK(client.connected());
    CHECK(silent.stats().connections == 2);
}

TEST_CASE("connect to a host without a listener fails fast")
{
    Lan lan{11, 22};
    ModbusClient client{lan.stack(1), tcp::Endpoint{host_ip(11), kPort}};
    ClientResult res;
    client.read(0, 1, [&](const ClientResult& x) { res = x; });
    lan.run_for(10ms);
    CHECK(res.error == ClientError::ConnectFailed);
}
