#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <tuple>

#include "icsbed/net/clock.hpp"
#include "icsbed/net/nic.hpp"
#include "icsbed/net/rng.hpp"
#include "icsbed/tcp/segment.hpp"

namespace icsbed::tcp {

enum class TcpState { Listen, SynSent, SynRcvd, Established, FinWait, Closed };

const char* to_string(TcpState s);

enum class ConnectError { None, Refused, Unreachable, TimedOut };

const char* to_string(ConnectError e);

struct Endpoint {
    Ipv4Addr ip;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;
};

struct TcpOptions {
    Duration delayed_ack = 40ms;
    Duration syn_timeout = 1s;
    Duration fin_timeout = 2s;
    std::size_t mss = 1460;
    std::uint16_t ephemeral_first = 40000;
};

struct ConnectionStats {
    std::uint64_t segments_in = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_delivered = 0;
    std::uint64_t rejected_duplicate = 0;
    std::uint64_t reordered_buffered = 0;
};

struct StackStats {
    std::uint64_t segments_in = 0;
    std::uint64_t bad_checksum = 0;
    std::uint64_t malformed = 0;
    std::uint64_t rst_sent = 0;
    std::uint64_t connections_accepted = 0;
    std::uint64_t rejected_duplicate = 0; // summed over connections
};

class TcpStack;

/// One end of a connection. Links are reliable, so there is no
/// retransmission or flow control: in-sequence payload is delivered,
/// segments at or below rcv_nxt are duplicates and dropped, segments ahead
/// of rcv_nxt wait in a reorder buffer until the gap closes.
class Connection : public std::enable_shared_from_this<Connection> {
public:
    using DataHandler = std::function<void(ByteView)>;
    using ClosedHandler = std::function<void()>;

    TcpState state() const { return state_; }
    bool established() const { return state_ == TcpState::Established; }
    Endpoint local() const { return local_; }
    Endpoint remote() const { return remote_; }
    std::uint32_t iss() const { return iss_; }
    std::uint32_t irs() const { return irs_; }
    std::uint32_t snd_nxt() const { return snd_nxt_; }
    std::uint32_t rcv_nxt() const { return rcv_nxt_; }

    /// Throws std::logic_error unless ESTABLISHED.
    void send(ByteView payload);
    void close();
    void abort();

    /// Receives every in-order chunk as it is accepted. Without a handler,
    /// accepted bytes accumulate and are drained by read().
    void on_data(DataHandler h) { data_handler_ = std::move(h); }
    void on_closed(ClosedHandler h) { closed_handler_ = std::move(h); }
    Bytes read();

    const ConnectionStats& stats() const { return stats_; }

private:
    friend class TcpStack;

    Connection(TcpStack& stack, Endpoint local, Endpoint remote) : stack_(&stack), local_(local), remote_(remote) {}

    void handle(const TcpSegment& seg);
    void accept_payload(const TcpSegment& seg);
    void transmit(std::uint8_t flags, ByteView payload = {});
    void schedule_delayed_ack();
    void become_closed();

    TcpStack* stack_;
    Endpoint local_;
    Endpoint remote_;
    TcpState state_ = TcpState::Closed;
    std::uint32_t iss_ = 0;
    std::uint32_t irs_ = 0;
    std::uint32_t snd_nxt_ = 0;
    std::uint32_t rcv_nxt_ = 0;
    bool ack_owed_ = false;
    bool ack_timer_armed_ = false;
    bool lingering_ = false; // closed by peer FIN, absorbing the final ACK
    std::map<std::uint32_t, TcpSegment> reorder_;
    Bytes inbox_;
    DataHandler data_handler_;
    ClosedHandler closed_handler_;
    std::function<void(std::shared_ptr<Connection>, ConnectError)> connect_handler_;
    EventId timer_ = 0;
    ConnectionStats stats_;
};

using ConnectionPtr = std::shared_ptr<Connection>;

/// Per-host TCP endpoint bound to one NIC.
class TcpStack {
public:
    using AcceptHandler = std::function<void(ConnectionPtr)>;
    using ConnectHandler = std::function<void(ConnectionPtr, ConnectError)>;

    TcpStack(EventQueue& events, net::Nic& nic, Rng isn_rng, TcpOptions options = {});
    TcpStack(const TcpStack&) = delete;
    TcpStack& operator=(const TcpStack&) = delete;

    /// Throws std::logic_error when the port already has a listener.
    void listen(std::uint16_t port, AcceptHandler on_accept);
    void unlisten(std::uint16_t port) { listeners_.erase(port); }
    bool listening(std::uint16_t port) const { return listeners_.contains(port); }

    /// The handler runs exactly once: with an ESTABLISHED connection, or with
    /// a null pointer and the failure reason.
    void connect(Endpoint remote, ConnectHandler on_done);

    /// Processes an inbound IPv4 packet carrying TCP; installed as the NIC's
    /// IPv4 handler by the constructor.
    void receive(const net::Ipv4Packet& packet);

    net::Nic& nic() { return nic_; }
    EventQueue& events() { return events_; }
    const TcpOptions& options() const { return options_; }
    const StackStats& stats() const { return stats_; }
    std::size_t connection_count() const { return conns_.size(); }

private:
    friend class Connection;
    using Key = std::tuple<std::uint16_t, Ipv4Addr, std::uint16_t>;

    void output(const Endpoint& local, const Endpoint& remote, const TcpSegment& seg,
                std::function<void()> on_unreachable = {});
    void reset_unknown(const net::Ipv4Packet& packet, const TcpSegment& seg);
    void forget(const Connection& c);
    std::uint16_t allocate_port(Ipv4Addr remote_ip, std::uint16_t remote_port);

    EventQueue& events_;
    net::Nic& nic_;
    Rng isn_rng_;
    TcpOptions options_;
    std::map<Key, ConnectionPtr> conns_;
    std::map<std::uint16_t, AcceptHandler> listeners_;
    std::uint16_t next_port_;
    std::uint16_t ip_id_ = 1;
    StackStats stats_;
};

} // namespace icsbed::tcp
