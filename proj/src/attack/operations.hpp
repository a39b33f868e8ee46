#pragma once

#include <functional>
#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "icsbed/attack/attacker.hpp"
#include "icsbed/modbus/client.hpp"

namespace icsbed::attack {

/// A TCP segment passing through the forwarder, already located inside
/// the IPv4 bytes. Interceptors may rewrite payload bytes in place.
struct Diverted {
    SimTime now{0};
    net::Ipv4Addr src;
    net::Ipv4Addr dst;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::size_t tcp_offset = 0;     // into the IPv4 bytes
    std::size_t payload_offset = 0; // into the IPv4 bytes
    std::size_t payload_len = 0;
    Bytes& ip_bytes;
    bool mutated = false;

    ByteView payload() const { return ByteView(ip_bytes).subspan(payload_offset, payload_len); }
};

/// One launched attack. Owned by the Attacker; scheduled callbacks are
/// dropped once the Attacker is gone.
class Operation {
public:
    Operation(Attacker& owner, int id) : owner_(owner), id_(id) {}
    virtual ~Operation() = default;

    virtual void begin() = 0;
    /// Frames diverted to the attacker while this operation listens.
    virtual void intercept(Diverted&) {}
    virtual bool intercepting() const { return false; }
    /// Called by finalize() on a still-open record, before it is closed.
    virtual void cut_short() {}

    int id() const { return id_; }
    bool done() const { return done_; }

protected:
    AttackRecord& record() { return owner_.records_[static_cast<std::size_t>(id_ - 1)]; }
    const AttackConfig& cfg() { return record().config; }
    SimTime now() const { return owner_.stack_.events().now(); }
    void at(SimTime t, std::function<void()> fn);
    void finish(SimTime end);
    void emit(const std::string& message) { owner_.emit(message); }

    net::Nic& nic() { return owner_.nic_; }
    tcp::TcpStack& stack() { return owner_.stack_; }
    const control::SignalMap& signals() { return owner_.signals_; }
    physics::Plant* plant() { return owner_.plant_; }
    Rng& rng() { return owner_.rng_; }
    std::map<net::Ipv4Addr, net::MacAddr>& true_macs() { return owner_.true_macs_; }
    std::vector<ReconHost>& last_recon() { return owner_.last_recon_; }
    net::Ipv4Addr host_ip(const std::string& name) { return *owner_.resolve_host(name); }
    int plc_at(net::Ipv4Addr ip) const { return owner_.plc_at(ip); }

    Attacker& owner_;
    int id_;
    bool done_ = false;
};

std::unique_ptr<Operation> make_recon(Attacker& a, int id);
std::unique_ptr<Operation> make_ddos(Attacker& a, int id);
std::unique_ptr<Operation> make_mitm(Attacker& a, int id);
std::unique_ptr<Operation> make_replay(Attacker& a, int id);
std::unique_ptr<Operation> make_sensor(Attacker& a, int id);

/// Replay keeps its captures here so Attacker::sniffed can reach them.
const std::vector<SniffedPayload>* replay_payloads(const Operation& op);

} // namespace icsbed::attack
