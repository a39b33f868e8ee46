#include "icsbed/net/nic.hpp"

#include <stdexcept>

namespace icsbed::net {

Nic::Nic(EventQueue& events, std::string name, MacAddr mac, Ipv4Addr ip)
    : events_(events), name_(std::move(name)), mac_(mac), ip_(ip)
{
}

void Nic::attach(Switch& sw)
{
    switch_ = &sw;
    port_ = sw.attach(*this);
}

void Nic::send_frame(EthernetFrame frame)
{
    if (switch_ == nullptr) {
        throw std::logic_error("NIC " + name_ + " is not attached to a switch");
    }
    ++stats_.frames_sent;
    switch_->transmit(port_, std::move(frame));
}

void Nic::send_arp(const ArpPacket& packet, MacAddr eth_dst)
{
    send_frame(EthernetFrame{eth_dst, mac_, kEtherTypeArp, encode_arp(packet)});
}

std::optional<MacAddr> Nic::cached(Ipv4Addr ip) const
{
    if (auto it = arp_cache_.find(ip); it != arp_cache_.end()) {
        return it->second.mac;
    }
    return std::nullopt;
}

void Nic::resolve(Ipv4Addr ip, ResolveHandler handler)
{
    if (auto hit = cached(ip)) {
        handler(hit);
        return;
    }
    auto [it, inserted] = pending_.try_emplace(ip);
    it->second.handlers.push_back(std::move(handler));
    if (!inserted) {
        return;
    }
    it->second.timeout = events_.schedule_in(arp_timeout, [this, ip] { complete(ip, std::nullopt); });
    send_arp(ArpPacket::request(mac_, ip_, ip), MacAddr::broadcast());
}

void Nic::complete(Ipv4Addr ip, std::optional<MacAddr> mac)
{
    auto it = pending_.find(ip);
    if (it == pending_.end()) {
        return;
    }
    auto handlers = std::move(it->second.handlers);
    events_.cancel(it->second.timeout);
    pending_.erase(it);
    for (auto& h : handlers) {
        h(mac);
    }
}

void Nic::send_ipv4(Ipv4Addr dst, Bytes packet, std::function<void()> on_unreachable)
{
    resolve(dst, [this, p = std::move(packet), fail = std::move(on_unreachable)](std::optional<MacAddr> mac) mutable {
        if (!mac) {
            ++stats_.unresolved_drops;
            if (fail) {
                fail();
            }
            return;
        }
        send_frame(EthernetFrame{*mac, mac_, kEtherTypeIpv4, std::move(p)});
    });
}

void Nic::deliver(const EthernetFrame& frame)
{
    if (frame.dst != mac_ && !frame.dst.is_broadcast()) {
        ++stats_.frames_ignored;
        return;
    }
    ++stats_.frames_received;
    if (frame.ethertype == kEtherTypeArp) {
        handle_arp(frame);
        return;
    }
    if (frame.ethertype != kEtherTypeIpv4) {
        ++stats_.malformed;
        return;
    }
    Ipv4Packet packet;
    try {
        packet = decode_ipv4(frame.payload);
    } catch (const DecodeError&) {
        ++stats_.malformed;
        return;
    }
    if (packet.header.dst == ip_) {
        if (ipv4_handler_) {
            ipv4_handler_(frame, packet);
        }
    } else if (forward_handler_) {
        forward_handler_(frame, packet);
    } else {
        ++stats_.misaddressed_ipv4;
    }
}

void Nic::handle_arp(const EthernetFrame& frame)
{
    ArpPacket arp;
    try {
        arp = decode_arp(frame.payload);
    } catch (const DecodeError&) {
        ++stats_.malformed;
        return;
    }
    ++stats_.arp_received;
    if (arp.spa != ip_ && arp.spa.value != 0) {
        arp_cache_[arp.spa] = ArpEntry{arp.sha, events_.now()};
    }
    for (const auto& o : arp_observers_) {
        o(arp);
    }
    if (arp.oper == ArpOp::Request && arp.tpa == ip_) {
        send_arp(ArpPacket::reply(mac_, ip_, arp.sha, arp.spa), arp.sha);
    }
    if (arp.spa.value != 0) {
        complete(arp.spa, arp.sha);
    }
}

} // namespace icsbed::net
