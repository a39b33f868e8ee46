#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "icsbed/scenario/simulation.hpp"

namespace icsbed::gateway {

struct LiveOptions {
    /// Virtual seconds per wall-clock second.
    double speed = 1.0;
    std::size_t queue_capacity = 256;
    /// How long a request waits for the simulation thread to answer.
    std::chrono::milliseconds reply_timeout{2000};
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// A Simulation paced to the wall clock on its own thread. Every access to
/// simulation state goes through a bounded task queue drained between
/// events; callers get copies. The simulation thread never waits on a
/// caller.
class LiveSimulation {
public:
    using Task = std::function<void(scenario::Simulation&)>;
    /// Stream messages: {"type": "snapshot", "data": ...} at stream_hz and
    /// {"type": "event", ...} as they happen. Runs on the simulation thread
    /// and must not block.
    using Listener = std::function<void(const nlohmann::json&)>;

    LiveSimulation(scenario::ScenarioConfig config, std::optional<std::filesystem::path> output_dir = std::nullopt,
                   LiveOptions options = {});
    ~LiveSimulation();
    LiveSimulation(const LiveSimulation&) = delete;
    LiveSimulation& operator=(const LiveSimulation&) = delete;

    void start();
    /// Stops pacing, finishes the run (outputs are written) and joins.
    void stop();
    /// Blocks until the run reaches its configured end or stop() is called.
    void wait();

    /// False before start(), after the run reaches its end, and after stop().
    bool accepting() const { return running_ && !halted_; }
    bool halted() const { return halted_; }
    const scenario::ScenarioConfig& config() const { return config_; }
    const control::SignalMap& signals() const { return signals_; }

    /// Latest published snapshot, with wall_time_ms added.
    nlohmann::json state() const;

    /// Queues a task; false when the queue is full or the thread is not running.
    bool post(Task t);
    /// Runs `f` on the simulation thread and returns its result, or nullopt
    /// on timeout / not running.
    std::optional<nlohmann::json> query(std::function<nlohmann::json(scenario::Simulation&)> f);

    int subscribe(Listener l);
    void unsubscribe(int id);

    std::uint64_t snapshots_published() const { return published_; }

private:
    void loop();
    void publish(scenario::Simulation& sim);
    void broadcast(const nlohmann::json& msg);

    scenario::ScenarioConfig config_;
    control::SignalMap signals_;
    LiveOptions options_;
    std::unique_ptr<scenario::Simulation> sim_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::deque<Task> queue_;
    bool stop_requested_ = false;
    std::atomic<bool> running_{false};
    std::atomic<bool> halted_{false};
    std::thread thread_;

    mutable std::mutex state_mu_;
    nlohmann::json state_;

    std::mutex listeners_mu_;
    std::map<int, Listener> listeners_;
    int next_listener_ = 1;
    std::vector<scenario::SimEvent> pending_events_;
    std::atomic<std::uint64_t> published_{0};
};

/// Routes one HTTP request to the API:
///   GET  /api/state, /api/signals, /api/attacks, /api/metrics?since=<s>
///   POST /api/command {signal, value}          -> 202
///   POST /api/attacks {config} or AttackConfig  -> 202 + id
/// Errors: 400 bad input, 404 unknown path, 405 wrong method, 409 write to a
/// non-Control signal, 503 while the simulation is halted or busy.
ApiResponse handle_request(LiveSimulation& live, std::string_view method, std::string_view target,
                           std::string_view body);

} // namespace icsbed::gateway
