#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_set>
#include <vector>

namespace icsbed {

/// Virtual time since the start of a run.
using SimTime = std::chrono::microseconds;
using Duration = std::chrono::microseconds;

using namespace std::chrono_literals;

constexpr double to_seconds(SimTime t) { return static_cast<double>(t.count()) / 1e6; }
constexpr double to_millis(Duration d) { return static_cast<double>(d.count()) / 1e3; }
inline SimTime from_seconds(double s) { return SimTime{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))}; }
inline Duration from_millis(double ms) { return Duration{static_cast<std::int64_t>(ms * 1e3 + (ms >= 0 ? 0.5 : -0.5))}; }

using EventId = std::uint64_t;

/// Discrete-event scheduler. Events fire in (due time, insertion sequence)
/// order; the clock never moves backwards.
class EventQueue {
public:
    using Action = std::function<void()>;
    using TraceHook = std::function<void(EventId, SimTime)>;

    SimTime now() const { return now_; }

    /// Rejects `at < now()` with std::invalid_argument.
    EventId schedule(SimTime at, Action action);
    EventId schedule_in(Duration delay, Action action) { return schedule(now_ + delay, std::move(action)); }

    /// Lazily cancels; a cancelled event is skipped when it reaches the head.
    void cancel(EventId id);

    /// Runs every event with due time <= t, then sets now() = t.
    void run_until(SimTime t);

    /// Runs the single next event if it is due at or before `limit`.
    bool run_next(SimTime limit);

    std::size_t pending() const { return live_.size(); }
    std::uint64_t fired() const { return fired_; }
    std::optional<SimTime> next_due();

    void set_trace(TraceHook hook) { trace_ = std::move(hook); }

private:
    struct Event {
        SimTime due;
        EventId seq;
        Action action;
    };
    // Min-heap on (due, seq) maintained with std::push_heap/pop_heap so the
    // action can be moved out of the popped element.
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            return a.due != b.due ? a.due > b.due : a.seq > b.seq;
        }
    };

    void drop_cancelled_head();

    SimTime now_{0};
    EventId next_seq_ = 1;
    std::uint64_t fired_ = 0;
    std::vector<Event> heap_;
    std::unordered_set<EventId> live_;
    TraceHook trace_;
};

} // namespace icsbed
