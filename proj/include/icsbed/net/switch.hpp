#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "icsbed/net/clock.hpp"
#include "icsbed/net/frame.hpp"
#include "icsbed/net/rng.hpp"

namespace icsbed::net {

class Nic;

struct SwitchConfig {
    Duration hop_latency = 100us;
    /// Both knobs default off: the plant LAN is reliable.
    double loss_probability = 0.0;
    Duration max_jitter = 0us;

    bool operator==(const SwitchConfig&) const = default;
};

struct SwitchStats {
    std::uint64_t received = 0;
    std::uint64_t unicast = 0;
    std::uint64_t flooded = 0;
    std::uint64_t dropped_detached = 0;
    std::uint64_t dropped_loss = 0;

    /// Every frame handed to the switch is accounted for exactly once.
    bool conserved() const { return received == unicast + flooded + dropped_detached + dropped_loss; }
};

/// Learning Ethernet switch. A frame transmitted at t is forwarded, and seen
/// by capture taps, at t + hop_latency (+ jitter), FIFO per ingress port.
class Switch {
public:
    using PortId = std::size_t;
    using CaptureTap = std::function<void(const EthernetFrame&, SimTime)>;

    Switch(EventQueue& events, SwitchConfig config, Rng rng);

    PortId attach(Nic& nic);
    void detach(PortId port);
    bool attached(PortId port) const { return port < ports_.size() && ports_[port] != nullptr; }

    void transmit(PortId ingress, EthernetFrame frame);

    void add_tap(CaptureTap tap) { taps_.push_back(std::move(tap)); }

    const std::map<MacAddr, PortId>& mac_table() const { return mac_table_; }
    const SwitchStats& stats() const { return stats_; }
    std::size_t port_count() const { return ports_.size(); }

private:
    void forward(PortId ingress, const EthernetFrame& frame);

    EventQueue& events_;
    SwitchConfig config_;
    Rng rng_;
    std::vector<Nic*> ports_;
    std::vector<SimTime> last_arrival_;
    std::map<MacAddr, PortId> mac_table_;
    std::vector<CaptureTap> taps_;
    SwitchStats stats_;
};

} // namespace icsbed::net
