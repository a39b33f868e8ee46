#include "icsbed/gateway/client.hpp"

#include <stdexcept>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace icsbed::gateway {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

HttpResult http_request(const std::string& host, std::uint16_t port, const std::string& method,
                        const std::string& target, const std::string& body, std::chrono::milliseconds timeout)
{
    asio::io_context ioc;
    tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    beast::error_code ec;

    const auto results = resolver.resolve(host, std::to_string(port), ec);
    if (ec) throw std::runtime_error("cannot resolve " + host + ": " + ec.message());
    stream.expires_after(timeout);
    stream.connect(results, ec);
    if (ec) throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());

    http::request<http::string_body> req{http::string_to_verb(method), target, 11};
    req.set(http::field::host, host);
    req.set(http::field::user_agent, "icsbed");
    if (!body.empty()) {
        req.set(http::field::content_type, "application/json");
        req.body() = body;
    }
    req.prepare_payload();
    stream.expires_after(timeout);
    http::write(stream, req, ec);
    if (ec) throw std::runtime_error("request failed: " + ec.message());

    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(stream, buffer, res, ec);
    if (ec) throw std::runtime_error("no response: " + ec.message());
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return HttpResult{static_cast<int>(res.result_int()), res.body()};
}

struct StreamClient::Impl {
    asio::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    beast::flat_buffer buffer;
    bool open = false;
};

StreamClient::StreamClient(const std::string& host, std::uint16_t port, const std::string& target)
    : impl_(std::make_unique<Impl>())
{
    tcp::resolver resolver(impl_->ioc);
    beast::error_code ec;
    const auto results = resolver.resolve(host, std::to_string(port), ec);
    if (ec) throw std::runtime_error("cannot resolve " + host + ": " + ec.message());
    auto& layer = beast::get_lowest_layer(impl_->ws);
    layer.expires_after(std::chrono::seconds(5));
    layer.connect(results, ec);
    if (ec) throw std::runtime_error("cannot connect: " + ec.message());
    impl_->ws.handshake(host + ":" + std::to_string(port), target, ec);
    if (ec) throw std::runtime_error("websocket handshake failed: " + ec.message());
    layer.expires_never();
    impl_->open = true;
}

StreamClient::~StreamClient()
{
    close();
}

std::optional<std::string> StreamClient::read(std::chrono::milliseconds timeout)
{
    auto& m = *impl_;
    if (!m.open) return std::nullopt;
    std::optional<std::string> out;
    bool done = false;
    m.buffer.consume(m.buffer.size());
    m.ws.async_read(m.buffer, [&](beast::error_code ec, std::size_t) {
        done = true;
        if (!ec) out = beast::buffers_to_string(m.buffer.data());
        else m.open = false;
    });
    m.ioc.restart();
    m.ioc.run_for(timeout);
    if (!done) {
        // Timed out: the pending read cannot be resumed, so the stream is
        // unusable afterwards.
        beast::get_lowest_layer(m.ws).cancel();
        m.ioc.restart();
        m.ioc.run();
        m.open = false;
        return std::nullopt;
    }
    return out;
}

void StreamClient::close()
{
    auto& m = *impl_;
    if (!m.open) return;
    beast::error_code ec;
    beast::get_lowest_layer(m.ws).expires_after(std::chrono::seconds(2));
    m.ws.close(websocket::close_code::normal, ec);
    m.open = false;
}

} // namespace icsbed::gateway
