#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "icsbed/modbus/codec.hpp"
#include "icsbed/tcp/stack.hpp"

namespace icsbed::modbus {

enum class ClientError { None, Exception, Timeout, ConnectFailed, Disconnected };

const char* to_string(ClientError e);

struct ClientResult {
    ClientError error = ClientError::None;
    std::optional<ExceptionCode> exception;
    std::vector<std::uint16_t> values; // read responses
    std::uint16_t transaction_id = 0;
    SimTime sent_at{0};
    Duration rtt{0};

    bool ok() const { return error == ClientError::None; }
};

struct ClientOptions {
    std::uint8_t unit_id = kUnitId;
    Duration timeout = 1s;
};

/// Round-trip sample emitted for every completed or timed-out transaction.
struct RttSample {
    std::uint16_t transaction_id = 0;
    SimTime sent_at{0};
    Duration rtt{0};
    ClientError error = ClientError::None;
};

/// Modbus/TCP client bound to one server endpoint. Connects lazily and
/// reconnects after a failure; transaction ids count up from 1 and match
/// responses to requests.
class ModbusClient {
public:
    using Handler = std::function<void(const ClientResult&)>;
    using RttObserver = std::function<void(const RttSample&)>;

    ModbusClient(tcp::TcpStack& stack, tcp::Endpoint server, ClientOptions options = {});
    ~ModbusClient();
    ModbusClient(const ModbusClient&) = delete;
    ModbusClient& operator=(const ModbusClient&) = delete;

    void read(std::uint16_t start, std::uint16_t quantity, Handler on_done);
    void write(std::uint16_t start, std::vector<std::uint16_t> values, Handler on_done);

    /// Sends an arbitrary pre-encoded request ADU; the response is matched on
    /// the transaction id embedded in `adu`.
    void send_raw(Bytes adu, Handler on_done);

    void set_rtt_observer(RttObserver o) { observer_ = std::move(o); }
    void disconnect();

    bool connected() const { return conn_ && conn_->established(); }
    std::size_t in_flight() const { return pending_.size(); }
    tcp::Endpoint server() const { return server_; }
    const tcp::ConnectionPtr& connection() const { return conn_; }

private:
    struct Pending {
        Handler handler;
        SimTime sent_at{0};
        EventId timeout = 0;
    };
    struct Outgoing {
        std::uint16_t txid;
        Bytes bytes;
        Handler handler;
    };

    void submit(Outgoing out);
    void ensure_connected();
    void transmit(Outgoing out);
    void on_bytes(ByteView chunk);
    void finish(std::uint16_t txid, ClientResult result);
    void fail_all(ClientError error);

    tcp::TcpStack& stack_;
    tcp::Endpoint server_;
    ClientOptions options_;
    tcp::ConnectionPtr conn_;
    bool connecting_ = false;
    std::uint16_t next_txid_ = 1;
    std::deque<Outgoing> queued_;
    std::map<std::uint16_t, Pending> pending_;
    Bytes buffer_;
    RttObserver observer_;
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

} // namespace icsbed::modbus
