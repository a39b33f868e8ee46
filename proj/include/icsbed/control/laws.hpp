#pragma once

#include <optional>

#include "icsbed/control/signals.hpp"

namespace icsbed::control {

inline constexpr double kFillerEpsilon = 0.005; // m

struct Plc1Inputs {
    double tank_level = 0.0;
    double tank_level_min = 10.0;
    double tank_level_max = 20.0;
    Mode input_mode = Mode::Auto;
    Mode output_mode = Mode::Auto;
    bool input_valve_was_open = false;
    // Last values read from PLC2; empty until the first answer arrives.
    std::optional<double> bottle_level;
    std::optional<double> bottle_level_max;
    std::optional<double> bottle_distance;
    double filler_epsilon = kFillerEpsilon;
};

struct Plc1Outputs {
    bool input_valve_open = false;
    bool output_valve_open = false;
    bool operator==(const Plc1Outputs&) const = default;
};

/// Input valve: hysteresis between min and max. Output valve: open while a
/// bottle that is not yet full stands under the filler.
Plc1Outputs control_law_plc1(const Plc1Inputs& in);

struct Plc2Inputs {
    double bottle_level = 0.0;
    double bottle_level_max = 1.5;
    double bottle_distance = 0.0;
    Mode belt_mode = Mode::Auto;
    /// Last output flow read from PLC1; treated as 0 until known.
    std::optional<double> output_flow;
    double filler_epsilon = kFillerEpsilon;
};

/// Belt stops for a bottle being filled and never runs while water flows.
bool control_law_plc2(const Plc2Inputs& in);

} // namespace icsbed::control
