#include "icsbed/net/clock.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace icsbed {

EventId EventQueue::schedule(SimTime at, Action action)
{
    if (at < now_) {
        throw std::invalid_argument("event scheduled in the past: at=" + std::to_string(at.count()) +
                                    "us now=" + std::to_string(now_.count()) + "us");
    }
    const EventId id = next_seq_++;
    heap_.push_back(Event{at, id, std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    live_.insert(id);
    return id;
}

void EventQueue::cancel(EventId id) { live_.erase(id); }

void EventQueue::drop_cancelled_head()
{
    while (!heap_.empty() && !live_.contains(heap_.front().seq)) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        heap_.pop_back();
    }
}

std::optional<SimTime> EventQueue::next_due()
{
    drop_cancelled_head();
    if (heap_.empty()) {
        return std::nullopt;
    }
    return heap_.front().due;
}

bool EventQueue::run_next(SimTime limit)
{
    drop_cancelled_head();
    if (heap_.empty() || heap_.front().due > limit) {
        return false;
    }
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    live_.erase(ev.seq);
    now_ = ev.due;
    ++fired_;
    if (trace_) {
        trace_(ev.seq, ev.due);
    }
    ev.action();
    return true;
}

void EventQueue::run_until(SimTime t)
{
    if (t < now_) {
        throw std::invalid_argument("run_until target is in the past");
    }
    while (run_next(t)) {
    }
    now_ = t;
}

} // namespace icsbed
