#include "icsbed/net/addr.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "icsbed/net/bytes.hpp"

namespace icsbed {

std::string to_hex(ByteView bytes)
{
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(bytes.size() * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i != 0) {
            out.push_back(' ');
        }
        out.push_back(digits[bytes[i] >> 4]);
        out.push_back(digits[bytes[i] & 0xF]);
    }
    return out;
}

} // namespace icsbed

namespace icsbed::net {

namespace {

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

MacAddr MacAddr::parse(std::string_view text)
{
    MacAddr mac;
    if (text.size() != 17) {
        throw std::invalid_argument("malformed MAC address: '" + std::string(text) + "'");
    }
    for (std::size_t i = 0; i < 6; ++i) {
        const int hi = hex_value(text[i * 3]);
        const int lo = hex_value(text[i * 3 + 1]);
        if (hi < 0 || lo < 0 || (i < 5 && text[i * 3 + 2] != ':' && text[i * 3 + 2] != '-')) {
            throw std::invalid_argument("malformed MAC address: '" + std::string(text) + "'");
        }
        mac.octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return mac;
}

std::string MacAddr::to_string() const
{
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", octets[0], octets[1], octets[2], octets[3],
                  octets[4], octets[5]);
    return buf;
}

Ipv4Addr Ipv4Addr::parse(std::string_view text)
{
    std::uint32_t value = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 4; ++i) {
        unsigned octet = 0;
        auto [next, ec] = std::from_chars(p, end, octet);
        if (ec != std::errc{} || octet > 255 || next == p) {
            throw std::invalid_argument("malformed IPv4 address: '" + std::string(text) + "'");
        }
        value = (value << 8) | octet;
        p = next;
        if (i < 3) {
            if (p == end || *p != '.') {
                throw std::invalid_argument("malformed IPv4 address: '" + std::string(text) + "'");
            }
            ++p;
        }
    }
    if (p != end) {
        throw std::invalid_argument("malformed IPv4 address: '" + std::string(text) + "'");
    }
    return Ipv4Addr{value};
}

std::string Ipv4Addr::to_string() const
{
    const auto o = octets();
    return std::to_string(o[0]) + "." + std::to_string(o[1]) + "." + std::to_string(o[2]) + "." + std::to_string(o[3]);
}

Subnet Subnet::parse(std::string_view text)
{
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        throw std::invalid_argument("subnet must be written as a.b.c.d/len: '" + std::string(text) + "'");
    }
    Subnet s;
    s.network = Ipv4Addr::parse(text.substr(0, slash));
    const auto len_text = text.substr(slash + 1);
    auto [next, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), s.prefix_len);
    if (ec != std::errc{} || next != len_text.data() + len_text.size() || s.prefix_len < 8 || s.prefix_len > 30) {
        throw std::invalid_argument("subnet prefix length must be in [8, 30]: '" + std::string(text) + "'");
    }
    s.network.value &= s.mask();
    return s;
}

std::vector<Ipv4Addr> Subnet::hosts() const
{
    std::vector<Ipv4Addr> out;
    const std::uint32_t base = network.value & mask();
    const std::uint32_t count = ~mask() + 1;
    for (std::uint32_t i = 1; i + 1 < count; ++i) {
        out.push_back(Ipv4Addr{base + i});
    }
    return out;
}

std::string Subnet::to_string() const { return network.to_string() + "/" + std::to_string(prefix_len); }

MacAddr plan_mac_for(Ipv4Addr ip)
{
    const unsigned host = ip.host_octet();
    // 41 -> 0x41, 123 -> 0x01 0x23
    MacAddr mac{{0xAA, 0xBB, 0xCC, 0x00, 0x00, 0x00}};
    mac.octets[4] = static_cast<std::uint8_t>(host / 100);
    mac.octets[5] = static_cast<std::uint8_t>(((host / 10) % 10) * 16 + host % 10);
    return mac;
}

} // namespace icsbed::net
