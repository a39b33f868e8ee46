#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace icsbed::net {

struct MacAddr {
    std::array<std::uint8_t, 6> octets{};

    static constexpr MacAddr broadcast() { return MacAddr{{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}}; }
    static constexpr MacAddr zero() { return MacAddr{}; }

    /// Accepts "AA:BB:CC:00:00:11" (also '-' separated); throws std::invalid_argument.
    static MacAddr parse(std::string_view text);

    bool is_broadcast() const { return *this == broadcast(); }
    std::string to_string() const;

    auto operator<=>(const MacAddr&) const = default;
};

struct Ipv4Addr {
    std::uint32_t value = 0; // host byte order, 192.168.0.1 == 0xC0A80001

    static constexpr Ipv4Addr from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
    {
        return Ipv4Addr{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
    }
    static Ipv4Addr parse(std::string_view text);

    std::array<std::uint8_t, 4> octets() const
    {
        return {static_cast<std::uint8_t>(value >> 24), static_cast<std::uint8_t>(value >> 16),
                static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
    }
    std::uint8_t host_octet() const { return static_cast<std::uint8_t>(value & 0xFF); }
    std::string to_string() const;

    auto operator<=>(const Ipv4Addr&) const = default;
};

struct Subnet {
    Ipv4Addr network;
    int prefix_len = 24;

    /// "192.168.0.0/24"
    static Subnet parse(std::string_view text);

    std::uint32_t mask() const { return prefix_len == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix_len); }
    bool contains(Ipv4Addr ip) const { return (ip.value & mask()) == (network.value & mask()); }

    /// Usable host addresses (excludes network and broadcast), ascending.
    std::vector<Ipv4Addr> hosts() const;
    std::string to_string() const;

    auto operator<=>(const Subnet&) const = default;
};

/// MAC assigned to a host under the default addressing plan: the decimal
/// host number spelled as the last octet's hex digits (".41" -> AA:BB:CC:00:00:41).
MacAddr plan_mac_for(Ipv4Addr ip);

} // namespace icsbed::net
