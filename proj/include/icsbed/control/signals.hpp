#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace icsbed::control {

enum class SignalKind { Input, Output, Control };
enum class ValueRange { Real, OnOff, OnOffAuto };

const char* to_string(SignalKind k);
const char* to_string(ValueRange r);

struct SignalDef {
    std::string name;
    SignalKind kind = SignalKind::Input;
    ValueRange range = ValueRange::Real;
    int plc = 1;
    std::uint16_t address = 0; // first of two holding registers

    bool writable() const { return kind == SignalKind::Control; }
    bool operator==(const SignalDef&) const = default;
};

/// Mode signals: Off / On force the actuator, Auto hands it to the control law.
enum class Mode { Off = 0, On = 1, Auto = 2 };

Mode decode_mode(double v);
double mode_value(Mode m);
const char* to_string(Mode m);

/// The bottle plant's 13 signals and their register addresses. Each PLC's
/// signals fill a contiguous block of register pairs starting at 0.
class SignalMap {
public:
    SignalMap() : SignalMap(default_defs()) {}
    /// Throws std::invalid_argument on a wrong signal set, kind mismatch or
    /// address layout problem.
    explicit SignalMap(std::vector<SignalDef> defs);

    static std::vector<SignalDef> default_defs();

    const std::vector<SignalDef>& all() const { return defs_; }
    const SignalDef* find(std::string_view name) const;
    /// Throws std::invalid_argument for unknown names.
    const SignalDef& at(std::string_view name) const;

    /// Signals of one PLC in address order.
    std::vector<SignalDef> of_plc(int plc) const;
    /// Register count covering every signal of `plc`.
    std::uint16_t register_span(int plc) const;

    bool operator==(const SignalMap&) const = default;

private:
    std::vector<SignalDef> defs_;
};

// Names used by the control laws.
namespace sig {
inline constexpr std::string_view kInputValveState = "tank_input_valve_state";
inline constexpr std::string_view kInputValveMode = "tank_input_valve_mode";
inline constexpr std::string_view kTankLevel = "tank_level_value";
inline constexpr std::string_view kTankLevelMax = "tank_level_max";
inline constexpr std::string_view kTankLevelMin = "tank_level_min";
inline constexpr std::string_view kOutputValveState = "tank_output_valve_state";
inline constexpr std::string_view kOutputValveMode = "tank_output_valve_mode";
inline constexpr std::string_view kOutputFlow = "tank_output_flow_value";
inline constexpr std::string_view kBeltState = "conveyor_belt_engine_state";
inline constexpr std::string_view kBeltMode = "conveyor_belt_engine_mode";
inline constexpr std::string_view kBottleLevel = "bottle_level_value";
inline constexpr std::string_view kBottleLevelMax = "bottle_level_max";
inline constexpr std::string_view kBottleDistance = "bottle_distance_to_filler_value";
} // namespace sig

} // namespace icsbed::control
