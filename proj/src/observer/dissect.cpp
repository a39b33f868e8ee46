#include "icsbed/observer/dissect.hpp"

namespace icsbed::observer {

Dissected dissect(const PcapRecord& rec)
{
    Dissected d;
    d.ts = rec.ts;
    d.wire_size = rec.data.size();
    try {
        const auto frame = net::decode_frame(rec.data);
        d.eth_src = frame.src;
        d.eth_dst = frame.dst;
        d.ethertype = frame.ethertype;
        if (frame.ethertype == net::kEtherTypeArp) {
            d.arp = net::decode_arp(frame.payload);
            return d;
        }
        const auto ip = net::decode_ipv4(frame.payload);
        d.ip = ip.header;
        if (ip.header.protocol != net::kIpProtoTcp) {
            d.malformed = "not TCP";
            return d;
        }
        d.tcp_checksum_ok = tcp::verify_tcp_checksum(ip.header.src, ip.header.dst, ip.payload);
        d.tcp = tcp::decode_segment(ip.payload);
        if (!d.tcp_checksum_ok) {
            d.malformed = "bad TCP checksum";
            return d;
        }
        const auto& seg = *d.tcp;
        if (seg.payload.empty() || (seg.src_port != modbus::kPort && seg.dst_port != modbus::kPort)) return d;
        const auto dir = seg.dst_port == modbus::kPort ? modbus::Direction::Request : modbus::Direction::Response;
        ByteView rest(seg.payload);
        while (!rest.empty()) {
            const auto r = modbus::decode_adu(rest, dir);
            if (!r.ok()) {
                d.malformed = r.status == modbus::DecodeResult::Status::NeedMore ? "partial Modbus ADU"
                                                                                : "Modbus: " + r.error;
                return d;
            }
            d.adus.push_back(r.adu);
            rest = rest.subspan(r.consumed);
        }
    } catch (const std::exception& e) {
        d.malformed = e.what();
    }
    return d;
}

std::vector<Dissected> dissect_capture(const std::filesystem::path& pcap)
{
    std::vector<Dissected> out;
    for (const auto& r : read_pcap(pcap)) out.push_back(dissect(r));
    return out;
}

} // namespace icsbed::observer
