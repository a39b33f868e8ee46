#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icsbed/net/clock.hpp"
#include "icsbed/net/frame.hpp"
#include "icsbed/net/switch.hpp"

namespace icsbed::net {

struct ArpEntry {
    MacAddr mac;
    SimTime learned_at;
};

using ArpCache = std::map<Ipv4Addr, ArpEntry>;

struct NicStats {
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_received = 0;
    std::uint64_t frames_ignored = 0; // unicast for another MAC
    std::uint64_t arp_received = 0;
    std::uint64_t malformed = 0;
    std::uint64_t unresolved_drops = 0;
    std::uint64_t misaddressed_ipv4 = 0;
};

/// One network interface with an IPv4 address and an ARP layer that trusts
/// every ARP packet it sees: the cache entry for the sender IP is
/// overwritten on each request or reply, and entries never expire.
class Nic {
public:
    using ResolveHandler = std::function<void(std::optional<MacAddr>)>;
    using Ipv4Handler = std::function<void(const EthernetFrame&, const Ipv4Packet&)>;
    using ArpObserver = std::function<void(const ArpPacket&)>;

    Nic(EventQueue& events, std::string name, MacAddr mac, Ipv4Addr ip);
    Nic(const Nic&) = delete;
    Nic& operator=(const Nic&) = delete;

    void attach(Switch& sw);
    bool is_attached() const { return switch_ != nullptr; }

    const std::string& name() const { return name_; }
    MacAddr mac() const { return mac_; }
    Ipv4Addr ip() const { return ip_; }

    void send_frame(EthernetFrame frame);
    void send_arp(const ArpPacket& packet, MacAddr eth_dst);

    /// Cache hit: the handler runs before resolve() returns. Miss: broadcasts
    /// a request and completes on the first reply, or with nullopt after
    /// arp_timeout.
    void resolve(Ipv4Addr ip, ResolveHandler handler);

    /// Resolves `dst` (the next hop) and sends `packet` as an IPv4 frame.
    void send_ipv4(Ipv4Addr dst, Bytes packet, std::function<void()> on_unreachable = {});

    /// Local IPv4 traffic (destination IP == ours).
    void set_ipv4_handler(Ipv4Handler h) { ipv4_handler_ = std::move(h); }
    /// IPv4 traffic addressed to our MAC but another IP; dropped when unset.
    void set_forward_handler(Ipv4Handler h) { forward_handler_ = std::move(h); }
    void add_arp_observer(ArpObserver o) { arp_observers_.push_back(std::move(o)); }

    /// Called by the switch on delivery.
    void deliver(const EthernetFrame& frame);

    const ArpCache& arp_cache() const { return arp_cache_; }
    std::optional<MacAddr> cached(Ipv4Addr ip) const;
    const NicStats& stats() const { return stats_; }

    Duration arp_timeout = 1s;

private:
    struct Pending {
        std::vector<ResolveHandler> handlers;
        EventId timeout = 0;
    };

    void handle_arp(const EthernetFrame& frame);
    void complete(Ipv4Addr ip, std::optional<MacAddr> mac);

    EventQueue& events_;
    std::string name_;
    MacAddr mac_;
    Ipv4Addr ip_;
    Switch* switch_ = nullptr;
    Switch::PortId port_ = 0;
    ArpCache arp_cache_;
    std::map<Ipv4Addr, Pending> pending_;
    Ipv4Handler ipv4_handler_;
    Ipv4Handler forward_handler_;
    std::vector<ArpObserver> arp_observers_;
    NicStats stats_;
};

} // namespace icsbed::net
