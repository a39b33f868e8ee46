#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <variant>

#include "icsbed/modbus/codec.hpp"
#include "icsbed/tcp/stack.hpp"

namespace icsbed::modbus {

/// A framed request pulled off a server connection. `body` is either a
/// decodable request or the exception a server must answer with.
struct IncomingRequest {
    tcp::ConnectionPtr conn;
    std::uint16_t transaction_id = 0;
    std::uint8_t unit_id = kUnitId;
    std::variant<Adu, ExceptionResponse> body;
    Bytes raw;
};

struct ServerStats {
    std::uint64_t connections = 0;
    std::uint64_t requests = 0;
    std::uint64_t malformed = 0;
    std::uint64_t responses = 0;
};

/// Modbus/TCP listener: reassembles ADUs from each connection's stream and
/// hands them to the owner, who decides when (and with what CPU cost) to
/// answer through respond().
class ModbusServer {
public:
    using AcceptHook = std::function<void(const tcp::ConnectionPtr&)>;
    using RequestSink = std::function<void(IncomingRequest)>;

    ModbusServer(tcp::TcpStack& stack, std::uint16_t port, RequestSink sink, AcceptHook on_accept = {});
    ~ModbusServer();
    ModbusServer(const ModbusServer&) = delete;
    ModbusServer& operator=(const ModbusServer&) = delete;

    void respond(const tcp::ConnectionPtr& conn, const Adu& response);

    const ServerStats& stats() const { return stats_; }
    std::uint16_t port() const { return port_; }

private:
    void on_bytes(const tcp::ConnectionPtr& conn, Bytes& buffer, ByteView chunk);

    tcp::TcpStack& stack_;
    std::uint16_t port_;
    RequestSink sink_;
    AcceptHook on_accept_;
    ServerStats stats_;
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

} // namespace icsbed::modbus
