#include <algorithm>
#include <set>

#include "operations.hpp"

namespace icsbed::attack {

namespace {

constexpr Duration kArpSpacing = 1ms;
constexpr Duration kReplyGrace = 1s;
constexpr Duration kScanSpacing = 1ms;

/// ARP sweep of the subnet followed by a TCP connect scan of each responder.
class Recon final : public Operation {
public:
    using Operation::Operation;

    void begin() override
    {
        subnet_ = net::Subnet::parse(cfg().subnet);
        std::weak_ptr<bool> alive = token_;
        nic().add_arp_observer([this, alive](const net::ArpPacket& p) {
            if (!alive.expired() && listening_) observe(p);
        });
        listening_ = true;
        SimTime t = now();
        std::uint64_t sent = 0;
        for (const auto ip : subnet_.hosts()) {
            if (ip == nic().ip()) continue;
            at(t, [this, ip] { nic().send_arp(net::ArpPacket::request(nic().mac(), nic().ip(), ip), net::MacAddr::broadcast()); });
            t += kArpSpacing;
            ++sent;
        }
        requests_ = sent;
        at(t + kReplyGrace, [this] { scan(); });
    }

    void cut_short() override
    {
        listening_ = false;
        publish();
    }

    ~Recon() override { *token_ = false; }

private:
    void observe(const net::ArpPacket& p)
    {
        if (p.oper != net::ArpOp::Reply || p.tpa != nic().ip() || !subnet_.contains(p.spa) || p.spa == nic().ip()) {
            return;
        }
        found_.emplace(p.spa, p.sha);
    }

    void scan()
    {
        listening_ = false;
        for (const auto& [ip, mac] : found_) {
            hosts_.push_back(ReconHost{ip, mac, {}});
        }
        SimTime t = now();
        for (std::size_t i = 0; i < hosts_.size(); ++i) {
            for (const auto port : cfg().ports) {
                ++outstanding_;
                at(t, [this, i, port] { probe(i, port); });
                t += kScanSpacing;
            }
        }
        if (outstanding_ == 0) complete();
    }

    void probe(std::size_t i, std::uint16_t port)
    {
        std::weak_ptr<bool> alive = token_;
        ++probes_;
        stack().connect(tcp::Endpoint{hosts_[i].ip, port}, [this, alive, i, port](tcp::ConnectionPtr c, tcp::ConnectError e) {
            if (alive.expired()) return;
            if (e == tcp::ConnectError::None && c) {
                hosts_[i].open_ports.push_back(port);
                c->abort();
            }
            if (--outstanding_ == 0) complete();
        });
    }

    void complete()
    {
        for (auto& h : hosts_) std::sort(h.open_ports.begin(), h.open_ports.end());
        publish();
        emit("recon found " + std::to_string(hosts_.size()) + " live hosts");
        finish(std::max(now(), record().start + cfg().duration));
    }

    void publish()
    {
        if (hosts_.empty() && !found_.empty()) {
            for (const auto& [ip, mac] : found_) hosts_.push_back(ReconHost{ip, mac, {}});
        }
        last_recon() = hosts_;
        nlohmann::json list = nlohmann::json::array();
        for (const auto& h : hosts_) {
            list.push_back({{"ip", h.ip.to_string()}, {"mac", h.mac.to_string()}, {"open_ports", h.open_ports}});
        }
        record().outcome = {{"arp_requests", requests_}, {"probes", probes_}, {"hosts", list}};
    }

    net::Subnet subnet_;
    bool listening_ = false;
    std::map<net::Ipv4Addr, net::MacAddr> found_;
    std::vector<ReconHost> hosts_;
    std::uint64_t requests_ = 0;
    std::uint64_t probes_ = 0;
    int outstanding_ = 0;
    std::shared_ptr<bool> token_ = std::make_shared<bool>(true);
};

} // namespace

std::unique_ptr<Operation> make_recon(Attacker& a, int id)
{
    return std::make_unique<Recon>(a, id);
}

} // namespace icsbed::attack
