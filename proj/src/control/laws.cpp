#include "icsbed/control/laws.hpp"

namespace icsbed::control {

namespace {

bool forced(Mode m, bool automatic)
{
    switch (m) {
    case Mode::On: return true;
    case Mode::Off: return false;
    case Mode::Auto: return automatic;
    }
    return false;
}

} // namespace

Plc1Outputs control_law_plc1(const Plc1Inputs& in)
{
    bool inlet = in.input_valve_was_open;
    if (in.tank_level <= in.tank_level_min) {
        inlet = true;
    } else if (in.tank_level >= in.tank_level_max) {
        inlet = false;
    }

    bool outlet = false;
    if (in.bottle_level && in.bottle_level_max && in.bottle_distance) {
        outlet = *in.bottle_distance <= in.filler_epsilon && *in.bottle_level < *in.bottle_level_max;
    }
    return {forced(in.input_mode, inlet), forced(in.output_mode, outlet)};
}

bool control_law_plc2(const Plc2Inputs& in)
{
    const bool filling = in.bottle_distance <= in.filler_epsilon && in.bottle_level < in.bottle_level_max;
    const bool flowing = in.output_flow.value_or(0.0) > 0.0;
    return forced(in.belt_mode, !filling && !flowing);
}

} // namespace icsbed::control
