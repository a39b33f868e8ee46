#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsbed/attack/attacker.hpp"
#include "icsbed/control/hmi.hpp"
#include "icsbed/control/plc.hpp"
#include "icsbed/net/nic.hpp"
#include "icsbed/net/switch.hpp"
#include "icsbed/observer/logs.hpp"
#include "icsbed/observer/pcap.hpp"
#include "icsbed/physics/plant.hpp"
#include "icsbed/scenario/config.hpp"
#include "icsbed/tcp/stack.hpp"

namespace icsbed::scenario {

struct RunSummary {
    std::string scenario;
    std::uint64_t seed = 0;
    SimTime end{0};
    std::uint64_t loops_plc1 = 0;
    std::uint64_t loops_plc2 = 0;
    std::uint64_t frames = 0;
    std::uint64_t attacks = 0;
    std::uint64_t bottles_filled = 0;
    std::uint64_t bottles_departed = 0;
    double spilled = 0.0;
    std::uint64_t events = 0;
    double max_delay_ms_plc1 = 0.0;
    double max_delay_ms_plc2 = 0.0;

    nlohmann::json to_json() const;
    bool operator==(const RunSummary&) const = default;
};

struct SimEvent {
    SimTime time{0};
    std::string source;
    std::string message;
};

/// Rejected operator command: unknown signal or bad value (HTTP 400).
struct CommandError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
/// Command aimed at a signal that is not a Control signal (HTTP 409).
struct CommandConflict : std::logic_error {
    using std::logic_error::logic_error;
};

/// The whole testbed for one scenario: network, plant, PLCs, HMIs and the
/// attacker, wired to the observer sinks when an output directory is given.
///
/// Output files: capture.pcap, state_plc1.csv, state_plc2.csv, metrics.csv,
/// attacks.jsonl, events.log. An INCOMPLETE marker sits in the directory
/// until finish() succeeds.
class Simulation {
public:
    explicit Simulation(ScenarioConfig config, std::optional<std::filesystem::path> output_dir = std::nullopt);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    const ScenarioConfig& config() const { return config_; }
    SimTime now() const { return events_.now(); }
    SimTime end_time() const { return SimTime{config_.duration}; }

    /// Drains events up to min(t, end_time()).
    void run_until(SimTime t);
    /// Closes open attacks, writes metrics.csv and closes every sink.
    RunSummary finish();
    /// run_until(end_time()) then finish().
    RunSummary run();
    bool finished() const { return finished_; }
    RunSummary summary() const;

    /// Writes the INCOMPLETE marker with a reason; no-op without outputs.
    void mark_incomplete(const std::string& reason) noexcept;

    /// Queues an operator write from the interactive HMI node. Throws
    /// CommandError or CommandConflict.
    void command(const std::string& signal, double value,
                 std::function<void(const modbus::ClientResult&)> done = {});
    /// Throws std::invalid_argument when the attack does not validate.
    int launch_attack(attack::AttackConfig cfg);

    /// Telemetry: virtual time, 13 signal values from the PLC registers,
    /// actuator and plant truths, latest timing samples, active attacks.
    nlohmann::json snapshot() const;
    nlohmann::json signals_json() const;
    /// Delay and response-time samples with time >= since.
    nlohmann::json metrics_json(SimTime since) const;
    nlohmann::json attacks_json() const;

    void on_event(std::function<void(const SimEvent&)> s) { event_listener_ = std::move(s); }
    const std::vector<SimEvent>& event_history() const { return history_; }

    EventQueue& events() { return events_; }
    net::Switch& network() { return *switch_; }
    net::Nic& nic(Role r);
    tcp::TcpStack& stack(Role r);
    physics::Plant& plant() { return *plant_; }
    const physics::Plant& plant() const { return *plant_; }
    control::Plc& plc(int id) { return id == 1 ? *plc1_ : *plc2_; }
    const control::Plc& plc(int id) const { return id == 1 ? *plc1_ : *plc2_; }
    control::HmiPoller& hmi1() { return *hmi1_; }
    control::HmiWriter& hmi2() { return *hmi2_; }
    attack::Attacker& attacker() { return *attacker_; }
    const attack::Attacker& attacker() const { return *attacker_; }
    const control::SignalMap& signals() const { return signals_; }
    const control::TimingMetrics& metrics() const { return metrics_; }
    const std::vector<control::StateRow>& rows(int plc) const { return plc == 1 ? rows1_ : rows2_; }
    std::uint64_t frames() const { return frames_; }
    const std::optional<std::filesystem::path>& output_dir() const { return out_dir_; }

    /// Keep state rows in memory (off by default for long runs).
    void keep_rows(bool on) { keep_rows_ = on; }

private:
    void record_event(std::string_view source, std::string_view message);
    std::size_t index_of(Role r) const;

    ScenarioConfig config_;
    std::optional<std::filesystem::path> out_dir_;
    control::SignalMap signals_;

    EventQueue events_;
    std::unique_ptr<net::Switch> switch_;
    std::vector<std::unique_ptr<net::Nic>> nics_;
    std::vector<std::unique_ptr<tcp::TcpStack>> stacks_;
    physics::SharedIO io_;
    std::unique_ptr<physics::Plant> plant_;
    std::unique_ptr<control::Plc> plc1_;
    std::unique_ptr<control::Plc> plc2_;
    std::unique_ptr<control::HmiPoller> hmi1_;
    std::unique_ptr<control::HmiWriter> hmi2_;
    std::unique_ptr<attack::Attacker> attacker_;

    std::unique_ptr<observer::PcapWriter> pcap_;
    std::unique_ptr<observer::StateLog> state1_;
    std::unique_ptr<observer::StateLog> state2_;
    std::unique_ptr<observer::AttackLog> attack_log_;
    std::unique_ptr<observer::EventLog> event_log_;

    control::TimingMetrics metrics_;
    std::vector<control::StateRow> rows1_;
    std::vector<control::StateRow> rows2_;
    bool keep_rows_ = false;
    std::map<int, control::DelaySample> last_delay_;
    std::map<std::string, control::ResponseSample> last_response_;
    std::vector<SimEvent> history_;
    std::function<void(const SimEvent&)> event_listener_;
    std::uint64_t frames_ = 0;
    std::uint64_t loops1_ = 0;
    std::uint64_t loops2_ = 0;
    bool finished_ = false;
};

} // namespace icsbed::scenario
