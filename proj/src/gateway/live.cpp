#include "icsbed/gateway/live.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>

namespace icsbed::gateway {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::int64_t wall_ms()
{
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json event_json(const scenario::SimEvent& e)
{
    return json{{"type", "event"}, {"time_s", to_seconds(e.time)}, {"source", e.source}, {"message", e.message}};
}

ApiResponse error(int status, const std::string& what)
{
    return ApiResponse{status, json{{"error", what}}};
}

} // namespace

LiveSimulation::LiveSimulation(scenario::ScenarioConfig config, std::optional<std::filesystem::path> output_dir,
                               LiveOptions options)
    : config_(std::move(config)), signals_(scenario::build_signal_map(config_)), options_(options)
{
    if (!(options_.speed > 0.0) || !std::isfinite(options_.speed)) {
        throw std::invalid_argument("speed must be a positive number");
    }
    if (options_.queue_capacity == 0) {
        throw std::invalid_argument("queue capacity must be at least 1");
    }
    config_.pacing = scenario::Pacing::WallClock;
    sim_ = std::make_unique<scenario::Simulation>(config_, std::move(output_dir));
    sim_->on_event([this](const scenario::SimEvent& e) { pending_events_.push_back(e); });
    state_ = sim_->snapshot();
}

LiveSimulation::~LiveSimulation()
{
    stop();
}

void LiveSimulation::start()
{
    std::lock_guard lock(mu_);
    if (thread_.joinable() || stop_requested_) return;
    running_ = true;
    thread_ = std::thread([this] {
        try {
            loop();
        } catch (const std::exception& e) {
            sim_->mark_incomplete(e.what());
            std::fprintf(stderr, "simulation aborted: %s\n", e.what());
            {
                std::lock_guard lock(mu_);
                halted_ = true;
                running_ = false;
            }
            done_cv_.notify_all();
        }
    });
}

void LiveSimulation::stop()
{
    {
        std::lock_guard lock(mu_);
        stop_requested_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    } else if (sim_ && !sim_->finished()) {
        try {
            sim_->finish();
        } catch (const std::exception& e) {
            sim_->mark_incomplete(e.what());
        }
    }
    {
        std::lock_guard lock(mu_);
        running_ = false;
        halted_ = true;
    }
    done_cv_.notify_all();
}

void LiveSimulation::wait()
{
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return halted_.load() || stop_requested_; });
}

json LiveSimulation::state() const
{
    std::lock_guard lock(state_mu_);
    return state_;
}

bool LiveSimulation::post(Task t)
{
    {
        std::lock_guard lock(mu_);
        if (!running_ || stop_requested_ || queue_.size() >= options_.queue_capacity) return false;
        queue_.push_back(std::move(t));
    }
    cv_.notify_all();
    return true;
}

std::optional<json> LiveSimulation::query(std::function<json(scenario::Simulation&)> f)
{
    auto promise = std::make_shared<std::promise<json>>();
    auto future = promise->get_future();
    const bool queued = post([promise, f = std::move(f)](scenario::Simulation& sim) {
        try {
            promise->set_value(f(sim));
        } catch (...) {
            promise->set_exception(std::current_exception());
        }
    });
    if (!queued) return std::nullopt;
    if (future.wait_for(options_.reply_timeout) != std::future_status::ready) return std::nullopt;
    return future.get();
}

int LiveSimulation::subscribe(Listener l)
{
    std::lock_guard lock(listeners_mu_);
    const int id = next_listener_++;
    listeners_[id] = std::move(l);
    return id;
}

void LiveSimulation::unsubscribe(int id)
{
    std::lock_guard lock(listeners_mu_);
    listeners_.erase(id);
}

void LiveSimulation::broadcast(const json& msg)
{
    std::lock_guard lock(listeners_mu_);
    for (auto& [id, l] : listeners_) l(msg);
}

void LiveSimulation::publish(scenario::Simulation& sim)
{
    auto snap = sim.snapshot();
    snap["wall_time_ms"] = wall_ms();
    {
        std::lock_guard lock(state_mu_);
        state_ = snap;
    }
    ++published_;
    broadcast(json{{"type", "snapshot"}, {"data", std::move(snap)}});
}

void LiveSimulation::loop()
{
    auto& sim = *sim_;
    const auto wall0 = Clock::now();
    const auto virt0 = sim.now();
    const auto publish_every = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / config_.stream_hz));
    auto next_publish = wall0;

    auto flush_events = [&] {
        auto events = std::move(pending_events_);
        pending_events_.clear();
        for (const auto& e : events) broadcast(event_json(e));
    };

    for (;;) {
        std::deque<Task> tasks;
        {
            std::unique_lock lock(mu_);
            if (stop_requested_) break;
            tasks.swap(queue_);
        }
        for (auto& t : tasks) {
            try {
                t(sim);
            } catch (const std::exception& e) {
                pending_events_.push_back({sim.now(), "gateway", std::string("task failed: ") + e.what()});
            }
        }

        if (!sim.finished()) {
            const auto elapsed = std::chrono::duration<double>(Clock::now() - wall0).count() * options_.speed;
            const auto target = virt0 + from_seconds(elapsed);
            sim.run_until(target);
            if (sim.now() >= sim.end_time()) {
                sim.finish();
                {
                    std::lock_guard lock(mu_);
                    halted_ = true;
                }
                publish(sim);
                flush_events();
                done_cv_.notify_all();
            }
        }
        flush_events();

        const auto now = Clock::now();
        if (now >= next_publish && !sim.finished()) {
            publish(sim);
            next_publish += publish_every;
            if (next_publish < now) next_publish = now + publish_every;
        }

        std::unique_lock lock(mu_);
        cv_.wait_for(lock, std::chrono::milliseconds(2), [this] { return stop_requested_ || !queue_.empty(); });
    }

    try {
        if (!sim.finished()) {
            sim.finish();
            publish(sim);
        }
    } catch (const std::exception& e) {
        sim.mark_incomplete(e.what());
    }
    flush_events();
}

namespace {

std::optional<double> query_param(std::string_view query, std::string_view key)
{
    std::size_t pos = 0;
    while (pos <= query.size()) {
        const auto amp = query.find('&', pos);
        const auto part = query.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
        const auto eq = part.find('=');
        if (part.substr(0, eq) == key && eq != std::string_view::npos) {
            const std::string v(part.substr(eq + 1));
            char* end = nullptr;
            const double d = std::strtod(v.c_str(), &end);
            if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
                throw std::invalid_argument(std::string(key) + ": expected a number of seconds");
            }
            return d;
        }
        if (amp == std::string_view::npos) break;
        pos = amp + 1;
    }
    return std::nullopt;
}

ApiResponse post_command(LiveSimulation& live, std::string_view body)
{
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        return error(400, std::string("body is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("signal") || !j["signal"].is_string()) {
        return error(400, "signal: expected a signal name");
    }
    if (!j.contains("value") || !j["value"].is_number()) {
        return error(400, "value: expected a number");
    }
    for (const auto& [k, v] : j.items()) {
        if (k != "signal" && k != "value") return error(400, k + ": unknown key");
    }
    const auto signal = j["signal"].get<std::string>();
    const double value = j["value"].get<double>();
    const auto* def = live.signals().find(signal);
    if (!def) return error(400, "unknown signal \"" + signal + "\"");
    if (!std::isfinite(value)) return error(400, "value must be finite");
    if (def->kind != control::SignalKind::Control) {
        return error(409, "\"" + signal + "\" is not a control signal");
    }
    if (!live.accepting()) return error(503, "simulation is halted");
    const bool queued = live.post([signal, value](scenario::Simulation& sim) { sim.command(signal, value); });
    if (!queued) return error(503, "command queue is full");
    return ApiResponse{202, json{{"status", "queued"}, {"signal", signal}, {"value", value}}};
}

ApiResponse post_attack(LiveSimulation& live, std::string_view body)
{
    attack::AttackConfig cfg;
    try {
        auto j = json::parse(body);
        if (j.is_object() && j.contains("config") && j.size() == 1) j = j["config"];
        cfg = attack::attack_from_json(j, "config");
        const auto& sc = live.config();
        attack::validate_attack(
            cfg, live.signals(),
            [&](const std::string& name) {
                const auto* n = sc.find_node(name);
                return n && n->role != scenario::Role::Attacker;
            },
            "config");
        if (cfg.kind == attack::AttackKind::Ddos) {
            const auto* n = sc.find_node(cfg.target);
            if (n->role != scenario::Role::Plc1 && n->role != scenario::Role::Plc2) {
                return error(400, "config.target: must be a PLC");
            }
        }
    } catch (const json::exception& e) {
        return error(400, std::string("body is not JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        return error(400, e.what());
    }
    if (!live.accepting()) return error(503, "simulation is halted");
    std::optional<json> reply;
    try {
        reply = live.query([cfg](scenario::Simulation& sim) {
            const int id = sim.launch_attack(cfg);
            return json{{"id", id}, {"kind", attack::to_string(cfg.kind)}, {"start_s", to_seconds(sim.attacker().record(id).start)}};
        });
    } catch (const std::invalid_argument& e) {
        return error(400, e.what());
    } catch (const std::exception& e) {
        return error(503, e.what());
    }
    if (!reply) return error(503, "simulation did not answer");
    return ApiResponse{202, *reply};
}

} // namespace

ApiResponse handle_request(LiveSimulation& live, std::string_view method, std::string_view target,
                           std::string_view body)
{
    const auto qpos = target.find('?');
    const auto path = target.substr(0, qpos);
    const auto query = qpos == std::string_view::npos ? std::string_view{} : target.substr(qpos + 1);
    const bool get = method == "GET";
    const bool post = method == "POST";

    if (path == "/api/state") {
        if (!get) return error(405, "use GET");
        return ApiResponse{200, live.state()};
    }
    if (path == "/api/signals") {
        if (!get) return error(405, "use GET");
        json list = json::array();
        for (const auto& d : live.signals().all()) {
            list.push_back({{"name", d.name},
                            {"kind", control::to_string(d.kind)},
                            {"range", control::to_string(d.range)},
                            {"plc", d.plc},
                            {"address", d.address},
                            {"registers", 2},
                            {"writable", d.writable()}});
        }
        return ApiResponse{200, list};
    }
    if (path == "/api/command") {
        if (!post) return error(405, "use POST");
        return post_command(live, body);
    }
    if (path == "/api/attacks") {
        if (post) return post_attack(live, body);
        if (!get) return error(405, "use GET or POST");
        const auto r = live.query([](scenario::Simulation& sim) { return sim.attacks_json(); });
        if (!r) return error(503, "simulation is not running");
        return ApiResponse{200, *r};
    }
    if (path == "/api/metrics") {
        if (!get) return error(405, "use GET");
        double since = 0.0;
        try {
            since = query_param(query, "since").value_or(0.0);
        } catch (const std::invalid_argument& e) {
            return error(400, e.what());
        }
        const auto r = live.query([since](scenario::Simulation& sim) { return sim.metrics_json(from_seconds(since)); });
        if (!r) return error(503, "simulation is not running");
        return ApiResponse{200, *r};
    }
    return error(404, "no such endpoint");
}

} // namespace icsbed::gateway
