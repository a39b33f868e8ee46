#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icsbed/attack/config.hpp"
#include "icsbed/control/hmi.hpp"
#include "icsbed/control/plc.hpp"
#include "icsbed/net/addr.hpp"
#include "icsbed/net/switch.hpp"
#include "icsbed/physics/plant.hpp"

namespace icsbed::scenario {

enum class Role { Plc1, Plc2, Hmi1, Hmi2, Attacker };

const char* to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

struct NodeSpec {
    std::string name;
    Role role = Role::Plc1;
    net::Ipv4Addr ip;
    net::MacAddr mac;

    bool operator==(const NodeSpec&) const = default;
};

enum class Pacing { Virtual, WallClock };

struct ScenarioConfig {
    std::string name = "bottle_plant";
    std::uint64_t seed = 1;
    Duration duration = 120s;
    Pacing pacing = Pacing::Virtual;

    std::string subnet = "192.168.0.0/24";
    net::SwitchConfig network;
    std::vector<NodeSpec> nodes;

    physics::PlantParams plant;
    physics::PlantInitial initial;
    control::PlcConfig plc1;
    control::PlcConfig plc2;
    /// Register address overrides, by signal name.
    std::map<std::string, std::uint16_t> signal_addresses;

    Duration hmi1_poll_period = 500ms;
    std::vector<control::ScriptStep> hmi2_script;

    std::vector<attack::AttackConfig> attacks;

    /// Gateway stream rate in serve mode.
    double stream_hz = 10.0;

    const NodeSpec& node(Role r) const;
    const NodeSpec* find_node(std::string_view name) const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// The default addressing plan: plc1 .11, plc2 .12, hmi1 .21, hmi2 .22,
/// attacker .41, MACs AA:BB:CC:00:00:<octet>.
std::vector<NodeSpec> default_nodes();

/// Defaults everywhere, no attacks: a 120 s normal-operation run.
ScenarioConfig default_scenario();

/// default_scenario() plus 800 reading agents against plc1 from 60 s to
/// 120 s. Same content as configs/bottle_plant.json.
ScenarioConfig bottle_plant_scenario();

/// Builds the signal map, applying address overrides.
control::SignalMap build_signal_map(const ScenarioConfig& c);

/// Full form with every field; parse(render(c)) == c.
nlohmann::json render(const ScenarioConfig& c);
std::string render_text(const ScenarioConfig& c);

/// Parses and validates. Missing keys take defaults; unknown keys and bad
/// values throw std::invalid_argument naming the key path.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig parse_config_text(std::string_view text);
ScenarioConfig load_config(const std::string& path);

/// Cross-field checks (addresses, references, attack windows). Called by
/// parse_config; exposed for configs built in code.
void validate(const ScenarioConfig& c);

} // namespace icsbed::scenario
