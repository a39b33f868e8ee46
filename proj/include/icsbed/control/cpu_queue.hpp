#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "icsbed/net/clock.hpp"

namespace icsbed::control {

/// Single-server, non-preemptive FIFO standing in for a PLC's processor.
/// A job arriving at t starts at max(t, busy_until) and completes `cost`
/// later; its callback runs at completion.
class CpuQueue {
public:
    using Done = std::function<void(SimTime start, SimTime end)>;

    explicit CpuQueue(EventQueue& events) : events_(events) {}

    /// Returns the completion time.
    SimTime enqueue(Duration cost, Done done);

    SimTime busy_until() const { return busy_until_; }
    std::size_t depth() const { return depth_; }
    std::uint64_t completed() const { return completed_; }
    Duration busy_total() const { return busy_total_; }

private:
    EventQueue& events_;
    SimTime busy_until_{0};
    std::size_t depth_ = 0;
    std::uint64_t completed_ = 0;
    Duration busy_total_{0};
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

} // namespace icsbed::control
