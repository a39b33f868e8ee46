#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace icsbed::gateway {

struct HttpResult {
    int status = 0;
    std::string body;
};

/// One blocking HTTP/1.1 request. Throws std::runtime_error on connection
/// failure or timeout.
HttpResult http_request(const std::string& host, std::uint16_t port, const std::string& method,
                        const std::string& target, const std::string& body = "",
                        std::chrono::milliseconds timeout = std::chrono::seconds(10));

/// Blocking WebSocket client for /api/stream.
class StreamClient {
public:
    StreamClient(const std::string& host, std::uint16_t port, const std::string& target = "/api/stream");
    ~StreamClient();
    StreamClient(const StreamClient&) = delete;
    StreamClient& operator=(const StreamClient&) = delete;

    /// Next text message, or nullopt once the server closed the stream or
    /// nothing arrived within `timeout`.
    std::optional<std::string> read(std::chrono::milliseconds timeout = std::chrono::seconds(5));
    void close();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace icsbed::gateway
