#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icsbed/attack/config.hpp"
#include "icsbed/control/signals.hpp"
#include "icsbed/net/nic.hpp"
#include "icsbed/net/rng.hpp"
#include "icsbed/tcp/stack.hpp"

namespace icsbed::physics {
class Plant;
}

namespace icsbed::attack {

/// A node the attacker may name in a config. `plc` is the PLC id served at
/// that address, 0 for non-PLC hosts.
struct HostInfo {
    std::string name;
    net::Ipv4Addr ip;
    int plc = 0;
};

struct ReconHost {
    net::Ipv4Addr ip;
    net::MacAddr mac;
    std::vector<std::uint16_t> open_ports;

    bool operator==(const ReconHost&) const = default;
};

/// One Modbus write request captured during a replay sniff window.
struct SniffedPayload {
    SimTime captured_at{0};
    Duration offset{0}; // from the start of the sniff window
    tcp::Endpoint src;
    tcp::Endpoint dst;
    Bytes adu;
};

struct AttackRecord {
    int id = 0;
    AttackConfig config;
    SimTime start{0};
    std::optional<SimTime> end;
    nlohmann::json outcome = nlohmann::json::object();
    /// Closed by finalize() before its planned end.
    bool truncated = false;

    bool finished() const { return end.has_value(); }
};

/// JSONL form: {id, kind, params, start, end, outcome, truncated}; start and
/// end in virtual microseconds.
nlohmann::json to_json(const AttackRecord& r);

struct ForwardStats {
    std::uint64_t forwarded = 0;
    std::uint64_t dropped_unresolved = 0;
};

class Operation;

/// Adversary engine running on the attacker node.
///
/// Installs a forwarding handler on the NIC: any IPv4 frame that reaches the
/// attacker MAC for a foreign IP is handed to the active interceptors and
/// then sent on to the true owner of the destination IP. Forwarding stays on
/// after an attack ends so that frames still in flight are not lost.
class Attacker {
public:
    using EventSink = std::function<void(std::string_view source, std::string_view message)>;
    using RecordSink = std::function<void(const AttackRecord&)>;

    Attacker(net::Nic& nic, tcp::TcpStack& stack, const control::SignalMap& signals, std::vector<HostInfo> hosts,
             physics::Plant* plant, Rng rng);
    ~Attacker();
    Attacker(const Attacker&) = delete;
    Attacker& operator=(const Attacker&) = delete;

    /// Validates and schedules an attack; returns its record id. A start in
    /// the past means now. Throws std::invalid_argument.
    int launch(AttackConfig cfg);

    const std::deque<AttackRecord>& records() const { return records_; }
    const AttackRecord& record(int id) const;
    /// Ids of attacks that have begun and not yet finished.
    std::vector<int> active() const;

    /// Hosts found by the most recent completed recon, ascending by IP.
    const std::vector<ReconHost>& last_recon() const { return last_recon_; }
    /// Payloads captured by a replay attack.
    const std::vector<SniffedPayload>& sniffed(int id) const;

    /// Closes every open record at `run_end`. Records cut short are flagged
    /// truncated; an open-ended sensor degradation is not.
    void finalize(SimTime run_end);

    /// Name or dotted IP to an address.
    std::optional<net::Ipv4Addr> resolve_host(const std::string& name_or_ip) const;
    const std::vector<HostInfo>& hosts() const { return hosts_; }

    void on_event(EventSink s) { event_sink_ = std::move(s); }
    /// Fires once per record, when it closes.
    void on_record(RecordSink s) { record_sink_ = std::move(s); }

    const ForwardStats& forward_stats() const { return fwd_; }
    net::Nic& nic() { return nic_; }

private:
    friend class Operation;

    void forward(const net::EthernetFrame& frame, const net::Ipv4Packet& packet);
    void close_record(int id, SimTime end, bool truncated);
    void emit(const std::string& message);
    std::optional<net::MacAddr> true_mac(net::Ipv4Addr ip) const;
    int plc_at(net::Ipv4Addr ip) const;

    net::Nic& nic_;
    tcp::TcpStack& stack_;
    const control::SignalMap& signals_;
    std::vector<HostInfo> hosts_;
    physics::Plant* plant_;
    Rng rng_;

    std::deque<AttackRecord> records_;
    std::vector<std::unique_ptr<Operation>> ops_;
    std::map<net::Ipv4Addr, net::MacAddr> true_macs_;
    std::vector<ReconHost> last_recon_;
    ForwardStats fwd_;
    EventSink event_sink_;
    RecordSink record_sink_;
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

} // namespace icsbed::attack
