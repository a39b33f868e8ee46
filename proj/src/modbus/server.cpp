#include "icsbed/modbus/server.hpp"

#include <memory>

namespace icsbed::modbus {

ModbusServer::ModbusServer(tcp::TcpStack& stack, std::uint16_t port, RequestSink sink, AcceptHook on_accept)
    : stack_(stack), port_(port), sink_(std::move(sink)), on_accept_(std::move(on_accept))
{
    std::weak_ptr<bool> alive = alive_;
    stack_.listen(port_, [this, alive](tcp::ConnectionPtr conn) {
        if (alive.expired()) {
            return;
        }
        ++stats_.connections;
        if (on_accept_) {
            on_accept_(conn);
        }
        auto buffer = std::make_shared<Bytes>();
        std::weak_ptr<tcp::Connection> weak = conn;
        conn->on_data([this, alive, weak, buffer](ByteView chunk) {
            if (auto c = weak.lock(); c && !alive.expired()) {
                on_bytes(c, *buffer, chunk);
            }
        });
    });
}

ModbusServer::~ModbusServer()
{
    *alive_ = false;
    stack_.unlisten(port_);
}

void ModbusServer::on_bytes(const tcp::ConnectionPtr& conn, Bytes& buffer, ByteView chunk)
{
    buffer.insert(buffer.end(), chunk.begin(), chunk.end());
    std::size_t off = 0;
    while (off < buffer.size()) {
        const ByteView rest(buffer.data() + off, buffer.size() - off);
        auto r = decode_adu(rest, Direction::Request);
        if (r.status == DecodeResult::Status::NeedMore) {
            break;
        }
        if (r.status == DecodeResult::Status::Error && !(r.header && r.suggested_exception)) {
            // Unframeable stream: nothing after this point can be trusted.
            ++stats_.malformed;
            buffer.clear();
            conn->abort();
            return;
        }
        IncomingRequest req;
        req.conn = conn;
        req.transaction_id = r.adu.transaction_id;
        req.unit_id = r.adu.unit_id;
        req.raw.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(r.consumed));
        if (r.ok()) {
            req.body = std::move(r.adu);
        } else {
            ++stats_.malformed;
            req.body = ExceptionResponse{static_cast<std::uint8_t>(r.function & 0x7F), *r.suggested_exception};
        }
        off += r.consumed;
        ++stats_.requests;
        sink_(std::move(req));
    }
    buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(off));
}

void ModbusServer::respond(const tcp::ConnectionPtr& conn, const Adu& response)
{
    if (!conn || !conn->established()) {
        return; // client went away while the request was queued
    }
    ++stats_.responses;
    conn->send(encode_adu(response));
}

} // namespace icsbed::modbus
