#include "icsbed/gateway/server.hpp"

#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

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

namespace {

constexpr std::size_t kMaxQueuedStream = 64;

class WsSession;

class Hub {
public:
    void join(const std::shared_ptr<WsSession>& s)
    {
        std::lock_guard lock(mu_);
        sessions_.push_back(s);
    }
    void leave(const WsSession* s)
    {
        std::lock_guard lock(mu_);
        std::erase_if(sessions_, [&](const std::weak_ptr<WsSession>& w) {
            auto p = w.lock();
            return !p || p.get() == s;
        });
    }
    void broadcast(std::shared_ptr<const std::string> msg);
    std::size_t size() const
    {
        std::lock_guard lock(mu_);
        return sessions_.size();
    }

private:
    mutable std::mutex mu_;
    std::vector<std::weak_ptr<WsSession>> sessions_;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

    void run(http::request<http::string_body> req)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->hub_.join(self);
            self->do_read();
        });
    }

    void send(std::shared_ptr<const std::string> msg)
    {
        asio::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)] {
            self->queue_.push_back(msg);
            if (self->queue_.size() > kMaxQueuedStream) {
                // Keep the in-flight message at the front.
                self->queue_.erase(self->queue_.begin() + 1);
            }
            if (self->queue_.size() == 1) self->do_write();
        });
    }

private:
    void do_read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->hub_.leave(self.get());
                return;
            }
            self->buffer_.consume(self->buffer_.size());
            self->do_read();
        });
    }

    void do_write()
    {
        ws_.text(true);
        ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->hub_.leave(self.get());
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty()) self->do_write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    Hub& hub_;
};

void Hub::broadcast(std::shared_ptr<const std::string> msg)
{
    std::vector<std::shared_ptr<WsSession>> live;
    {
        std::lock_guard lock(mu_);
        for (auto& w : sessions_) {
            if (auto p = w.lock()) live.push_back(std::move(p));
        }
    }
    for (auto& s : live) s->send(msg);
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, LiveSimulation& live, Hub& hub)
        : stream_(std::move(socket)), live_(live), hub_(hub)
    {
    }

    void run() { do_read(); }

private:
    void do_read()
    {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec)
    {
        if (ec == http::error::end_of_stream) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return;

        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/api/stream") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), hub_)->run(std::move(req_));
                return;
            }
            respond(404, R"({"error":"no such stream"})");
            return;
        }

        if (req_.method() == http::verb::options) {
            respond(204, "");
            return;
        }
        const std::string method(req_.method_string());
        const std::string target(req_.target());
        ApiResponse r;
        try {
            r = handle_request(live_, method, target, req_.body());
        } catch (const std::exception& e) {
            r = ApiResponse{500, nlohmann::json{{"error", e.what()}}};
        }
        respond(r.status, r.body.dump());
    }

    void respond(int status, std::string body)
    {
        auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(status), req_.version());
        res->set(http::field::server, "icsbed");
        res->set(http::field::content_type, "application/json");
        res->set(http::field::access_control_allow_origin, "*");
        res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res->set(http::field::access_control_allow_headers, "Content-Type");
        res->keep_alive(req_.keep_alive());
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!res->keep_alive()) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    LiveSimulation& live_;
    Hub& hub_;
};

} // namespace

struct GatewayServer::Impl {
    LiveSimulation& live;
    std::string address;
    std::uint16_t port;
    int threads;
    asio::io_context ioc;
    tcp::acceptor acceptor{ioc};
    Hub hub;
    std::vector<std::thread> pool;
    int listener = 0;
    bool started = false;

    Impl(LiveSimulation& l, std::string a, std::uint16_t p, int t)
        : live(l), address(std::move(a)), port(p), threads(t), ioc(t)
    {
    }

    void do_accept()
    {
        acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec == asio::error::operation_aborted) return;
            } else {
                std::make_shared<HttpSession>(std::move(socket), live, hub)->run();
            }
            if (acceptor.is_open()) do_accept();
        });
    }
};

GatewayServer::GatewayServer(LiveSimulation& live, std::string address, std::uint16_t port, int threads)
    : impl_(std::make_unique<Impl>(live, std::move(address), port, threads < 1 ? 1 : threads))
{
}

GatewayServer::~GatewayServer()
{
    stop();
}

void GatewayServer::start()
{
    auto& m = *impl_;
    if (m.started) return;
    beast::error_code ec;
    const auto addr = asio::ip::make_address(m.address, ec);
    if (ec) throw std::runtime_error("bad listen address " + m.address + ": " + ec.message());
    const tcp::endpoint ep{addr, m.port};
    m.acceptor.open(ep.protocol(), ec);
    if (!ec) m.acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) m.acceptor.bind(ep, ec);
    if (!ec) m.acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
        throw std::runtime_error("cannot listen on " + m.address + ":" + std::to_string(m.port) + ": " + ec.message());
    }
    m.port = m.acceptor.local_endpoint().port();
    m.listener = m.live.subscribe([&m](const nlohmann::json& msg) {
        m.hub.broadcast(std::make_shared<const std::string>(msg.dump()));
    });
    m.do_accept();
    for (int i = 0; i < m.threads; ++i) {
        m.pool.emplace_back([&m] { m.ioc.run(); });
    }
    m.started = true;
}

void GatewayServer::stop()
{
    auto& m = *impl_;
    if (!m.started) return;
    m.live.unsubscribe(m.listener);
    asio::post(m.ioc, [&m] {
        beast::error_code ec;
        m.acceptor.close(ec);
    });
    m.ioc.stop();
    for (auto& t : m.pool) t.join();
    m.pool.clear();
    m.started = false;
}

std::uint16_t GatewayServer::port() const
{
    return impl_->port;
}

std::size_t GatewayServer::stream_clients() const
{
    return impl_->hub.size();
}

} // namespace icsbed::gateway
