#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icsbed/control/signals.hpp"
#include "icsbed/net/clock.hpp"

namespace icsbed::attack {

enum class AttackKind { Recon, Ddos, Mitm, Replay, SensorDegradation };

const char* to_string(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view s);

enum class RuleMode { Set, Random, Offset };
enum class RuleDirection { Requests, Responses, Both };

const char* to_string(RuleDirection d);

/// Rewrites one signal's register pair inside diverted Modbus traffic.
struct InjectionRule {
    std::string signal;
    RuleMode mode = RuleMode::Set;
    double value = 0.0; // Set: new value; Offset: delta
    double low = 0.0;   // Random: bounds
    double high = 0.0;
    RuleDirection direction = RuleDirection::Requests;

    bool operator==(const InjectionRule&) const = default;
};

struct AttackConfig {
    AttackKind kind = AttackKind::Recon;
    SimTime start{0};
    /// Recon: earliest close of the record. DDoS / MITM: attack length.
    /// Sensor degradation: 0 means for the rest of the run. Unused by replay,
    /// whose length is sniff * (1 + replay_count).
    Duration duration{0};

    // recon
    std::string subnet = "192.168.0.0/24";
    std::vector<std::uint16_t> ports{502, 80};

    // ddos
    std::string target = "plc1";
    int agents = 800;
    std::uint16_t read_address = 0;
    std::uint16_t read_quantity = 2;
    Duration request_timeout = 1s;

    // mitm / replay
    std::vector<std::string> victims;
    Duration poison_interval = 1s;
    std::vector<InjectionRule> rules;
    Duration sniff = 15s;
    int replay_count = 2;
    bool reinject_control = true;

    // sensor degradation
    std::string signal;
    double error_fraction = 0.0;

    Duration total_duration() const;
    SimTime end() const { return start + total_duration(); }

    bool operator==(const AttackConfig&) const = default;
};

/// Kind-specific defaults (durations) for a config built from scratch.
AttackConfig default_attack(AttackKind kind);

/// Serialized form: only the keys meaningful for the kind, times in seconds.
nlohmann::json to_json(const AttackConfig& c);

/// Strict parse: unknown keys, wrong types and bad values throw
/// std::invalid_argument naming `path` and the key.
AttackConfig attack_from_json(const nlohmann::json& j, const std::string& path = "attack");

/// Checks references against the scenario. `host_known` answers whether a
/// node name or IP exists.
void validate_attack(const AttackConfig& c, const control::SignalMap& signals,
                     const std::function<bool(const std::string&)>& host_known, const std::string& path = "attack");

} // namespace icsbed::attack
