#include "icsbed/control/cpu_queue.hpp"

#include <algorithm>
#include <stdexcept>

namespace icsbed::control {

SimTime CpuQueue::enqueue(Duration cost, Done done)
{
    if (cost < Duration{0}) {
        throw std::invalid_argument("negative CPU cost");
    }
    const SimTime start = std::max(events_.now(), busy_until_);
    const SimTime end = start + cost;
    busy_until_ = end;
    busy_total_ += cost;
    ++depth_;
    std::weak_ptr<bool> alive = alive_;
    events_.schedule(end, [this, alive, start, end, done = std::move(done)] {
        if (alive.expired()) {
            return;
        }
        --depth_;
        ++completed_;
        if (done) {
            done(start, end);
        }
    });
    return end;
}

} // namespace icsbed::control
