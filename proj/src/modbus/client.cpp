#include "icsbed/modbus/client.hpp"

namespace icsbed::modbus {

const char* to_string(ClientError e)
{
    switch (e) {
    case ClientError::None: return "ok";
    case ClientError::Exception: return "exception";
    case ClientError::Timeout: return "timeout";
    case ClientError::ConnectFailed: return "connect failed";
    case ClientError::Disconnected: return "disconnected";
    }
    return "?";
}

ModbusClient::ModbusClient(tcp::TcpStack& stack, tcp::Endpoint server, ClientOptions options)
    : stack_(stack), server_(server), options_(options)
{
}

ModbusClient::~ModbusClient()
{
    *alive_ = false;
    for (auto& [txid, p] : pending_) {
        stack_.events().cancel(p.timeout);
    }
    if (conn_) {
        conn_->on_data({});
        conn_->on_closed({});
    }
}

void ModbusClient::read(std::uint16_t start, std::uint16_t quantity, Handler on_done)
{
    const std::uint16_t txid = next_txid_++;
    Adu adu{txid, options_.unit_id, ReadHoldingRequest{start, quantity}};
    submit(Outgoing{txid, encode_adu(adu), std::move(on_done)});
}

void ModbusClient::write(std::uint16_t start, std::vector<std::uint16_t> values, Handler on_done)
{
    const std::uint16_t txid = next_txid_++;
    Adu adu{txid, options_.unit_id, WriteMultipleRequest{start, std::move(values)}};
    submit(Outgoing{txid, encode_adu(adu), std::move(on_done)});
}

void ModbusClient::send_raw(Bytes adu, Handler on_done)
{
    const std::uint16_t txid = adu.size() >= 2 ? get_u16(adu, 0) : 0;
    submit(Outgoing{txid, std::move(adu), std::move(on_done)});
}

void ModbusClient::submit(Outgoing out)
{
    if (connected()) {
        transmit(std::move(out));
        return;
    }
    queued_.push_back(std::move(out));
    ensure_connected();
}

void ModbusClient::ensure_connected()
{
    if (connecting_ || connected()) {
        return;
    }
    connecting_ = true;
    std::weak_ptr<bool> alive = alive_;
    stack_.connect(server_, [this, alive](tcp::ConnectionPtr conn, tcp::ConnectError err) {
        if (alive.expired()) {
            if (conn) {
                conn->abort();
            }
            return;
        }
        connecting_ = false;
        if (!conn) {
            auto queued = std::move(queued_);
            queued_.clear();
            for (auto& q : queued) {
                ClientResult r;
                r.error = ClientError::ConnectFailed;
                r.transaction_id = q.txid;
                r.sent_at = stack_.events().now();
                if (q.handler) {
                    q.handler(r);
                }
            }
            (void)err;
            return;
        }
        conn_ = conn;
        buffer_.clear();
        conn_->on_data([this, alive](ByteView chunk) {
            if (!alive.expired()) {
                on_bytes(chunk);
            }
        });
        conn_->on_closed([this, alive] {
            if (!alive.expired()) {
                conn_.reset();
                fail_all(ClientError::Disconnected);
            }
        });
        while (!queued_.empty() && connected()) {
            auto q = std::move(queued_.front());
            queued_.pop_front();
            transmit(std::move(q));
        }
    });
}

void ModbusClient::transmit(Outgoing out)
{
    auto& events = stack_.events();
    Pending p;
    p.handler = std::move(out.handler);
    p.sent_at = events.now();
    const std::uint16_t txid = out.txid;
    std::weak_ptr<bool> alive = alive_;
    p.timeout = events.schedule_in(options_.timeout, [this, alive, txid] {
        if (alive.expired()) {
            return;
        }
        ClientResult r;
        r.error = ClientError::Timeout;
        finish(txid, r);
        // A stalled stream is not worth keeping; the next request reconnects.
        if (conn_) {
            auto c = std::move(conn_);
            c->on_closed({});
            c->abort();
            fail_all(ClientError::Disconnected);
        }
    });
    if (auto old = pending_.find(txid); old != pending_.end()) {
        events.cancel(old->second.timeout);
        pending_.erase(old);
    }
    pending_[txid] = std::move(p);
    conn_->send(out.bytes);
}

void ModbusClient::on_bytes(ByteView chunk)
{
    buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
    std::size_t off = 0;
    while (off < buffer_.size()) {
        const ByteView rest(buffer_.data() + off, buffer_.size() - off);
        auto r = decode_adu(rest, Direction::Response);
        if (r.status == DecodeResult::Status::NeedMore) {
            break;
        }
        if (!r.ok()) {
            if (!r.header) {
                buffer_.clear();
                return;
            }
            off += r.consumed;
            continue;
        }
        off += r.consumed;
        ClientResult result;
        if (auto* rd = std::get_if<ReadHoldingResponse>(&r.adu.pdu)) {
            result.values = std::move(rd->values);
        } else if (auto* ex = std::get_if<ExceptionResponse>(&r.adu.pdu)) {
            result.error = ClientError::Exception;
            result.exception = ex->code;
        }
        finish(r.adu.transaction_id, std::move(result));
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(std::min(off, buffer_.size())));
}

void ModbusClient::finish(std::uint16_t txid, ClientResult result)
{
    auto it = pending_.find(txid);
    if (it == pending_.end()) {
        return; // late answer to a timed-out request
    }
    Pending p = std::move(it->second);
    pending_.erase(it);
    auto& events = stack_.events();
    events.cancel(p.timeout);
    result.transaction_id = txid;
    result.sent_at = p.sent_at;
    result.rtt = events.now() - p.sent_at;
    if (observer_) {
        observer_(RttSample{txid, p.sent_at, result.rtt, result.error});
    }
    if (p.handler) {
        p.handler(result);
    }
}

void ModbusClient::fail_all(ClientError error)
{
    std::vector<std::uint16_t> ids;
    for (const auto& [txid, p] : pending_) {
        ids.push_back(txid);
    }
    for (auto txid : ids) {
        ClientResult r;
        r.error = error;
        finish(txid, r);
    }
}

void ModbusClient::disconnect()
{
    if (conn_) {
        auto c = std::move(conn_);
        c->on_closed({});
        c->close();
    }
    fail_all(ClientError::Disconnected);
}

} // namespace icsbed::modbus
