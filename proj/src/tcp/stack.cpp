#include "icsbed/tcp/stack.hpp"

#include <algorithm>
#include <stdexcept>

#include "icsbed/net/frame.hpp"

namespace icsbed::tcp {

namespace {

// Circular sequence-space comparison.
bool seq_lt(std::uint32_t a, std::uint32_t b) { return static_cast<std::int32_t>(a - b) < 0; }

} // namespace

const char* to_string(TcpState s)
{
    switch (s) {
    case TcpState::Listen: return "LISTEN";
    case TcpState::SynSent: return "SYN_SENT";
    case TcpState::SynRcvd: return "SYN_RCVD";
    case TcpState::Established: return "ESTABLISHED";
    case TcpState::FinWait: return "FIN_WAIT";
    case TcpState::Closed: return "CLOSED";
    }
    return "?";
}

const char* to_string(ConnectError e)
{
    switch (e) {
    case ConnectError::None: return "none";
    case ConnectError::Refused: return "refused";
    case ConnectError::Unreachable: return "unreachable";
    case ConnectError::TimedOut: return "timed out";
    }
    return "?";
}

// ---------------------------------------------------------------- Connection

void Connection::send(ByteView payload)
{
    if (state_ != TcpState::Established) {
        throw std::logic_error(std::string("send on connection in state ") + to_string(state_));
    }
    const std::size_t mss = stack_->options().mss;
    for (std::size_t off = 0; off < payload.size(); off += mss) {
        const auto chunk = payload.subspan(off, std::min(mss, payload.size() - off));
        transmit(flags::ACK | flags::PSH, chunk);
        stats_.bytes_sent += chunk.size();
    }
}

void Connection::close()
{
    if (state_ != TcpState::Established) {
        if (state_ == TcpState::SynSent || state_ == TcpState::SynRcvd) {
            abort();
        }
        return;
    }
    transmit(flags::FIN | flags::ACK);
    state_ = TcpState::FinWait;
    std::weak_ptr<Connection> weak = shared_from_this();
    timer_ = stack_->events().schedule_in(stack_->options().fin_timeout, [weak] {
        if (auto self = weak.lock(); self && self->state_ == TcpState::FinWait) {
            self->become_closed();
        }
    });
}

void Connection::abort()
{
    if (state_ == TcpState::Closed) {
        return;
    }
    transmit(flags::RST | flags::ACK);
    ++stack_->stats_.rst_sent;
    become_closed();
}

Bytes Connection::read()
{
    Bytes out;
    out.swap(inbox_);
    return out;
}

void Connection::transmit(std::uint8_t f, ByteView payload)
{
    TcpSegment seg;
    seg.src_port = local_.port;
    seg.dst_port = remote_.port;
    seg.seq = snd_nxt_;
    seg.ack = (f & flags::ACK) ? rcv_nxt_ : 0;
    seg.flags = f;
    seg.payload.assign(payload.begin(), payload.end());
    snd_nxt_ += seg.seq_len();
    if (f & flags::ACK) {
        ack_owed_ = false;
    }
    std::function<void()> unreachable;
    if (state_ == TcpState::SynSent) {
        std::weak_ptr<Connection> weak = shared_from_this();
        unreachable = [weak] {
            auto self = weak.lock();
            if (self && self->state_ == TcpState::SynSent) {
                auto cb = std::move(self->connect_handler_);
                self->become_closed();
                if (cb) {
                    cb(nullptr, ConnectError::Unreachable);
                }
            }
        };
    }
    stack_->output(local_, remote_, seg, std::move(unreachable));
}

void Connection::schedule_delayed_ack()
{
    ack_owed_ = true;
    if (ack_timer_armed_) {
        return;
    }
    ack_timer_armed_ = true;
    std::weak_ptr<Connection> weak = shared_from_this();
    stack_->events().schedule_in(stack_->options().delayed_ack, [weak] {
        auto self = weak.lock();
        if (!self) {
            return;
        }
        self->ack_timer_armed_ = false;
        if (self->ack_owed_ && (self->state_ == TcpState::Established || self->state_ == TcpState::FinWait)) {
            self->transmit(flags::ACK);
        }
    });
}

void Connection::become_closed()
{
    const bool was_open = state_ != TcpState::Closed;
    state_ = TcpState::Closed;
    stack_->events().cancel(timer_);
    stack_->forget(*this);
    if (was_open && closed_handler_) {
        auto h = std::move(closed_handler_);
        h();
    }
}

void Connection::accept_payload(const TcpSegment& seg)
{
    if (!seg.payload.empty()) {
        rcv_nxt_ += static_cast<std::uint32_t>(seg.payload.size());
        stats_.bytes_delivered += seg.payload.size();
        if (data_handler_) {
            data_handler_(seg.payload);
        } else {
            inbox_.insert(inbox_.end(), seg.payload.begin(), seg.payload.end());
        }
    }
    if (seg.has(flags::FIN)) {
        rcv_nxt_ += 1;
    }
}

void Connection::handle(const TcpSegment& seg)
{
    ++stats_.segments_in;
    auto keep_alive = shared_from_this();

    if (lingering_) {
        if (seg.has(flags::ACK) && !seg.has(flags::RST)) {
            lingering_ = false;
            stack_->forget(*this);
        }
        return;
    }

    if (seg.has(flags::RST)) {
        if (state_ == TcpState::SynSent) {
            if (seg.has(flags::ACK) && seg.ack == snd_nxt_) {
                auto cb = std::move(connect_handler_);
                become_closed();
                if (cb) {
                    cb(nullptr, ConnectError::Refused);
                }
            }
            return;
        }
        become_closed();
        return;
    }

    switch (state_) {
    case TcpState::SynSent:
        if (seg.has(flags::SYN) && seg.has(flags::ACK) && seg.ack == snd_nxt_) {
            irs_ = seg.seq;
            rcv_nxt_ = seg.seq + 1;
            state_ = TcpState::Established;
            stack_->events().cancel(timer_);
            transmit(flags::ACK);
            if (auto cb = std::move(connect_handler_)) {
                cb(keep_alive, ConnectError::None);
            }
        }
        return;

    case TcpState::SynRcvd:
        if (seg.has(flags::SYN)) {
            return; // duplicate SYN
        }
        if (!seg.has(flags::ACK) || seg.ack != snd_nxt_) {
            return;
        }
        state_ = TcpState::Established;
        stack_->events().cancel(timer_);
        ++stack_->stats_.connections_accepted;
        if (auto it = stack_->listeners_.find(local_.port); it != stack_->listeners_.end()) {
            it->second(keep_alive);
        }
        if (seg.payload.empty() && !seg.has(flags::FIN)) {
            return;
        }
        break; // the handshake-completing ACK also carried data

    case TcpState::Established:
    case TcpState::FinWait:
        break;

    default:
        return;
    }

    // Pure ACKs carry nothing to sequence.
    if (seg.payload.empty() && !seg.has(flags::FIN)) {
        return;
    }

    if (seg.seq != rcv_nxt_) {
        if (seq_lt(seg.seq, rcv_nxt_)) {
            ++stats_.rejected_duplicate;
            ++stack_->stats_.rejected_duplicate;
        } else if (reorder_.try_emplace(seg.seq, seg).second) {
            ++stats_.reordered_buffered;
        }
        return;
    }

    bool fin = seg.has(flags::FIN);
    accept_payload(seg);
    while (!fin && !reorder_.empty()) {
        auto it = reorder_.begin();
        if (it->first != rcv_nxt_) {
            if (seq_lt(it->first, rcv_nxt_)) {
                reorder_.erase(it);
                continue;
            }
            break;
        }
        TcpSegment next = std::move(it->second);
        reorder_.erase(it);
        fin = next.has(flags::FIN);
        accept_payload(next);
        if (state_ == TcpState::Closed) {
            return;
        }
    }
    if (state_ == TcpState::Closed) {
        return; // the data handler closed us
    }

    if (!fin) {
        schedule_delayed_ack();
        return;
    }

    if (state_ == TcpState::FinWait) {
        transmit(flags::ACK);
        become_closed();
    } else {
        transmit(flags::FIN | flags::ACK);
        const bool was_open = state_ != TcpState::Closed;
        state_ = TcpState::Closed;
        lingering_ = true;
        std::weak_ptr<Connection> weak = keep_alive;
        stack_->events().schedule_in(stack_->options().fin_timeout, [weak] {
            if (auto self = weak.lock(); self && self->lingering_) {
                self->lingering_ = false;
                self->stack_->forget(*self);
            }
        });
        if (was_open && closed_handler_) {
            auto h = std::move(closed_handler_);
            h();
        }
    }
}

// ------------------------------------------------------------------ TcpStack

TcpStack::TcpStack(EventQueue& events, net::Nic& nic, Rng isn_rng, TcpOptions options)
    : events_(events), nic_(nic), isn_rng_(std::move(isn_rng)), options_(options), next_port_(options.ephemeral_first)
{
    nic_.set_ipv4_handler([this](const net::EthernetFrame&, const net::Ipv4Packet& p) { receive(p); });
}

void TcpStack::listen(std::uint16_t port, AcceptHandler on_accept)
{
    if (!listeners_.try_emplace(port, std::move(on_accept)).second) {
        throw std::logic_error("port " + std::to_string(port) + " already has a listener");
    }
}

std::uint16_t TcpStack::allocate_port(Ipv4Addr remote_ip, std::uint16_t remote_port)
{
    const std::uint32_t span = 65536u - options_.ephemeral_first;
    for (std::uint32_t i = 0; i < span; ++i) {
        const std::uint16_t p = next_port_;
        next_port_ = static_cast<std::uint16_t>(p == 65535 ? options_.ephemeral_first : p + 1);
        if (!listeners_.contains(p) && !conns_.contains(Key{p, remote_ip, remote_port})) {
            return p;
        }
    }
    throw std::runtime_error("ephemeral ports exhausted on " + nic_.name());
}

void TcpStack::connect(Endpoint remote, ConnectHandler on_done)
{
    const Endpoint local{nic_.ip(), allocate_port(remote.ip, remote.port)};
    ConnectionPtr c{new Connection(*this, local, remote)};
    c->state_ = TcpState::SynSent;
    c->iss_ = isn_rng_.next_u32();
    c->snd_nxt_ = c->iss_;
    c->connect_handler_ = std::move(on_done);
    conns_[Key{local.port, remote.ip, remote.port}] = c;

    // SYN first: an ARP miss registers its own timeout, which must win a tie
    // with the SYN timer so an absent host reports Unreachable.
    c->transmit(flags::SYN);
    if (c->state_ != TcpState::SynSent) {
        return;
    }
    std::weak_ptr<Connection> weak = c;
    c->timer_ = events_.schedule_in(options_.syn_timeout, [weak] {
        auto self = weak.lock();
        if (self && self->state_ == TcpState::SynSent) {
            auto cb = std::move(self->connect_handler_);
            self->become_closed();
            if (cb) {
                cb(nullptr, ConnectError::TimedOut);
            }
        }
    });
}

void TcpStack::output(const Endpoint& local, const Endpoint& remote, const TcpSegment& seg,
                      std::function<void()> on_unreachable)
{
    net::Ipv4Header ip;
    ip.identification = ip_id_++;
    ip.src = local.ip;
    ip.dst = remote.ip;
    nic_.send_ipv4(remote.ip, net::encode_ipv4(ip, encode_segment(seg, local.ip, remote.ip)), std::move(on_unreachable));
}

void TcpStack::forget(const Connection& c)
{
    auto it = conns_.find(Key{c.local_.port, c.remote_.ip, c.remote_.port});
    if (it != conns_.end() && it->second.get() == &c) {
        conns_.erase(it);
    }
}

void TcpStack::reset_unknown(const net::Ipv4Packet& packet, const TcpSegment& seg)
{
    if (seg.has(flags::RST)) {
        return;
    }
    TcpSegment rst;
    rst.src_port = seg.dst_port;
    rst.dst_port = seg.src_port;
    if (seg.has(flags::ACK)) {
        rst.seq = seg.ack;
        rst.flags = flags::RST;
    } else {
        rst.seq = 0;
        rst.ack = seg.seq + seg.seq_len();
        rst.flags = flags::RST | flags::ACK;
    }
    rst.window = 0;
    ++stats_.rst_sent;
    output(Endpoint{packet.header.dst, seg.dst_port}, Endpoint{packet.header.src, seg.src_port}, rst);
}

void TcpStack::receive(const net::Ipv4Packet& packet)
{
    if (packet.header.protocol != net::kIpProtoTcp) {
        return;
    }
    ++stats_.segments_in;
    if (!verify_tcp_checksum(packet.header.src, packet.header.dst, packet.payload)) {
        ++stats_.bad_checksum;
        return;
    }
    TcpSegment seg;
    try {
        seg = decode_segment(packet.payload);
    } catch (const DecodeError&) {
        ++stats_.malformed;
        return;
    }

    if (auto it = conns_.find(Key{seg.dst_port, packet.header.src, seg.src_port}); it != conns_.end()) {
        auto conn = it->second;
        conn->handle(seg);
        return;
    }

    if (seg.has(flags::SYN) && !seg.has(flags::ACK) && listeners_.contains(seg.dst_port)) {
        const Endpoint local{nic_.ip(), seg.dst_port};
        const Endpoint remote{packet.header.src, seg.src_port};
        ConnectionPtr c{new Connection(*this, local, remote)};
        c->state_ = TcpState::SynRcvd;
        c->irs_ = seg.seq;
        c->rcv_nxt_ = seg.seq + 1;
        c->iss_ = isn_rng_.next_u32();
        c->snd_nxt_ = c->iss_;
        conns_[Key{local.port, remote.ip, remote.port}] = c;
        std::weak_ptr<Connection> weak = c;
        c->timer_ = events_.schedule_in(options_.syn_timeout, [weak] {
            if (auto self = weak.lock(); self && self->state_ == TcpState::SynRcvd) {
                self->become_closed();
            }
        });
        c->transmit(flags::SYN | flags::ACK);
        return;
    }

    reset_unknown(packet, seg);
}

} // namespace icsbed::tcp
