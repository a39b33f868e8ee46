#include "icsbed/net/switch.hpp"

#include <algorithm>

#include "icsbed/net/nic.hpp"

namespace icsbed::net {

Switch::Switch(EventQueue& events, SwitchConfig config, Rng rng) : events_(events), config_(config), rng_(std::move(rng)) {}

Switch::PortId Switch::attach(Nic& nic)
{
    ports_.push_back(&nic);
    last_arrival_.push_back(SimTime{0});
    return ports_.size() - 1;
}

void Switch::detach(PortId port)
{
    if (port < ports_.size()) {
        ports_[port] = nullptr;
    }
}

void Switch::transmit(PortId ingress, EthernetFrame frame)
{
    ++stats_.received;
    if (config_.loss_probability > 0.0 && rng_.uniform01() < config_.loss_probability) {
        ++stats_.dropped_loss;
        return;
    }
    Duration delay = config_.hop_latency;
    if (config_.max_jitter.count() > 0) {
        delay += Duration{static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>(config_.max_jitter.count()) + 1))};
    }
    const SimTime arrival = std::max(events_.now() + delay, last_arrival_[ingress]);
    last_arrival_[ingress] = arrival;
    events_.schedule(arrival, [this, ingress, f = std::move(frame)] { forward(ingress, f); });
}

void Switch::forward(PortId ingress, const EthernetFrame& frame)
{
    for (const auto& tap : taps_) {
        tap(frame, events_.now());
    }
    if (!frame.src.is_broadcast()) {
        mac_table_[frame.src] = ingress;
    }

    if (!frame.dst.is_broadcast()) {
        if (auto it = mac_table_.find(frame.dst); it != mac_table_.end()) {
            if (!attached(it->second)) {
                ++stats_.dropped_detached;
                return;
            }
            ++stats_.unicast;
            if (it->second != ingress) {
                ports_[it->second]->deliver(frame);
            }
            return;
        }
    }

    ++stats_.flooded;
    for (PortId p = 0; p < ports_.size(); ++p) {
        if (p != ingress && ports_[p] != nullptr) {
            ports_[p]->deliver(frame);
        }
    }
}

} // namespace icsbed::net
