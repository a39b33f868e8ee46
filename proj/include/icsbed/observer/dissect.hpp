#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icsbed/modbus/codec.hpp"
#include "icsbed/net/frame.hpp"
#include "icsbed/observer/pcap.hpp"
#include "icsbed/tcp/segment.hpp"

namespace icsbed::observer {

/// One captured frame taken apart layer by layer. Modbus ADUs are decoded
/// from TCP payloads on port 502, as requests when the destination port is
/// 502 and as responses otherwise.
struct Dissected {
    SimTime ts{0};
    std::size_t wire_size = 0;
    net::MacAddr eth_src;
    net::MacAddr eth_dst;
    std::uint16_t ethertype = 0;
    std::optional<net::ArpPacket> arp;
    std::optional<net::Ipv4Header> ip;
    std::optional<tcp::TcpSegment> tcp;
    bool tcp_checksum_ok = false;
    std::vector<modbus::Adu> adus;
    /// Empty when every layer decoded cleanly.
    std::string malformed;
};

Dissected dissect(const PcapRecord& rec);
std::vector<Dissected> dissect_capture(const std::filesystem::path& pcap);

} // namespace icsbed::observer
