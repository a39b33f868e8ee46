#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "icsbed/gateway/live.hpp"

namespace icsbed::gateway {

/// HTTP + WebSocket front end for a LiveSimulation. REST routes go through
/// handle_request; WS /api/stream relays the stream messages. Slow stream
/// clients drop their oldest queued messages.
class GatewayServer {
public:
    /// port 0 picks a free port; see port().
    GatewayServer(LiveSimulation& live, std::string address = "127.0.0.1", std::uint16_t port = 8080,
                  int threads = 4);
    ~GatewayServer();
    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    /// Binds and starts the I/O threads. Throws std::runtime_error when the
    /// address cannot be bound.
    void start();
    void stop();

    std::uint16_t port() const;
    std::size_t stream_clients() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace icsbed::gateway
