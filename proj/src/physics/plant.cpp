#include "icsbed/physics/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icsbed::physics {

namespace {

constexpr double kSnap = 1e-9;

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("plant.") + name + " must be positive");
    }
}

void require_fraction(double v, const char* name)
{
    if (!(v >= 0.0 && v < 1.0)) {
        throw std::invalid_argument(std::string("plant.") + name + " must be in [0, 1)");
    }
}

} // namespace

void PlantParams::validate() const
{
    if (tank_levels <= 0) throw std::invalid_argument("plant.tank_levels must be positive");
    if (bottle_levels <= 0) throw std::invalid_argument("plant.bottle_levels must be positive");
    require_positive(tank_level_capacity, "tank_level_capacity");
    require_positive(tank_inlet_flow, "tank_inlet_flow");
    require_positive(tank_outlet_flow, "tank_outlet_flow");
    require_positive(bottle_level_capacity, "bottle_level_capacity");
    require_positive(bottle_spacing, "bottle_spacing");
    require_positive(belt_speed, "belt_speed");
    require_positive(filler_epsilon, "filler_epsilon");
    require_fraction(tank_level_error, "tank_level_error");
    require_fraction(bottle_level_error, "bottle_level_error");
    require_fraction(bottle_distance_error, "bottle_distance_error");
    if (!(full_fraction > 0.0 && full_fraction <= 1.0)) {
        throw std::invalid_argument("plant.full_fraction must be in (0, 1]");
    }
    if (tick <= Duration{0}) throw std::invalid_argument("plant.tick must be positive");
}

Plant::Plant(PlantParams params, PlantInitial initial, SharedIO& io, Rng sensor_rng)
    : params_(params), io_(io), sensor_rng_(sensor_rng)
{
    params_.validate();
    if (initial.tank_level < 0 || initial.tank_level > params_.tank_capacity()) {
        throw std::invalid_argument("initial tank level outside [0, capacity]");
    }
    if (initial.bottle_level < 0 || initial.bottle_level > params_.bottle_capacity()) {
        throw std::invalid_argument("initial bottle level outside [0, capacity]");
    }
    if (initial.bottle_distance < 0 || initial.bottle_distance > params_.bottle_spacing) {
        throw std::invalid_argument("initial bottle distance outside [0, spacing]");
    }
    state_.tank_level = initial.tank_level;
    state_.bottle_level = initial.bottle_level;
    state_.bottle_distance = initial.bottle_distance;
    initial_ = state_;
    if (!io_.contains(kTankLevel)) {
        declare_entries(io_);
    }
}

void Plant::declare_entries(SharedIO& io)
{
    for (auto name : {kTankLevel, kOutputFlow, kBottleLevel, kBottleDistance}) {
        io.declare(std::string(name), Side::Plant);
    }
    for (auto name : {kInputValve, kOutputValve, kBeltEngine}) {
        io.declare(std::string(name), Side::Plc);
    }
}

void Plant::read_actuators()
{
    state_.input_valve_open = io_.read(kInputValve) >= 0.5;
    state_.output_valve_open = io_.read(kOutputValve) >= 0.5;
    state_.belt_running = io_.read(kBeltEngine) >= 0.5;
}

void Plant::step(Duration dt)
{
    const double s = to_seconds(dt);
    if (s <= 0.0) {
        return;
    }
    auto& st = state_;
    const double tank_cap = params_.tank_capacity();
    const double bottle_cap = params_.bottle_capacity();
    const bool at_filler = st.bottle_distance <= params_.filler_epsilon + kSnap;

    // Tank.
    double tank = st.tank_level;
    if (st.input_valve_open) {
        const double in = params_.tank_inlet_flow * s;
        st.inlet_total += in;
        tank += in;
    }
    double out = 0.0;
    if (st.output_valve_open) {
        out = std::min(params_.tank_outlet_flow * s, tank);
        tank -= out;
    }
    if (tank > tank_cap) {
        st.spilled += tank - tank_cap;
        tank = tank_cap;
    }
    st.tank_level = tank;

    // Filler.
    if (out > 0.0) {
        if (at_filler) {
            st.bottle_level += out;
            if (st.bottle_level > bottle_cap) {
                st.spilled += st.bottle_level - bottle_cap;
                st.bottle_level = bottle_cap;
            }
        } else {
            st.spilled += out;
        }
    }

    // Conveyor.
    if (!st.belt_running) {
        if (at_filler) {
            st.bottle_resting = true;
        }
        return;
    }
    if (at_filler && st.bottle_resting) {
        ++st.bottles_departed;
        st.shipped += st.bottle_level;
        if (st.bottle_level >= params_.full_fraction * bottle_cap) {
            ++st.bottles_filled;
        }
        st.bottle_level = 0.0;
        st.bottle_distance = params_.bottle_spacing;
        st.bottle_resting = false;
        return;
    }
    st.bottle_distance -= params_.belt_speed * s;
    if (st.bottle_distance < kSnap) {
        st.bottle_distance = 0.0;
    }
}

double Plant::true_value(std::string_view name) const
{
    if (name == kTankLevel) return state_.tank_level;
    if (name == kBottleLevel) return state_.bottle_level;
    if (name == kBottleDistance) return state_.bottle_distance;
    if (name == kOutputFlow) {
        return state_.output_valve_open && state_.tank_level > 0.0 ? params_.tank_outlet_flow : 0.0;
    }
    throw std::invalid_argument("not a plant sensor: " + std::string(name));
}

double Plant::sensor_error(std::string_view name) const
{
    if (auto it = error_override_.find(name); it != error_override_.end()) {
        return it->second;
    }
    if (name == kTankLevel) return params_.tank_level_error;
    if (name == kBottleLevel) return params_.bottle_level_error;
    if (name == kBottleDistance) return params_.bottle_distance_error;
    if (name == kOutputFlow) return 0.0;
    throw std::invalid_argument("not a plant sensor: " + std::string(name));
}

void Plant::set_sensor_error(std::string_view name, double fraction)
{
    (void)true_value(name); // validates the name
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("sensor error must be in [0, 1)");
    }
    error_override_[std::string(name)] = fraction;
}

void Plant::clear_sensor_error(std::string_view name)
{
    if (auto it = error_override_.find(name); it != error_override_.end()) {
        error_override_.erase(it);
    }
}

double Plant::sample_sensor(std::string_view name)
{
    const double truth = true_value(name);
    const double e = sensor_error(name);
    // Always draw, so changing one sensor's error keeps the others' noise.
    const double u = (2.0 * sensor_rng_.uniform01() - 1.0) * e;
    const double reading = truth * (1.0 + u);
    io_.write(Side::Plant, name, reading);
    return reading;
}

void Plant::sample_all()
{
    for (auto name : {kTankLevel, kOutputFlow, kBottleLevel, kBottleDistance}) {
        sample_sensor(name);
    }
}

void Plant::tick()
{
    read_actuators();
    step(params_.tick);
    sample_all();
    ++ticks_;
}

void Plant::start(EventQueue& events, SimTime start)
{
    events.schedule(start, [this, &events] {
        sample_all();
        schedule_next(events);
    });
}

void Plant::schedule_next(EventQueue& events)
{
    events.schedule_in(params_.tick, [this, &events] {
        tick();
        schedule_next(events);
    });
}

double Plant::mass_balance_residual() const
{
    const auto& s = state_;
    const auto& i = initial_;
    return (s.inlet_total - i.inlet_total) - (s.tank_level - i.tank_level) -
           (s.bottle_level + s.shipped - i.bottle_level - i.shipped) - (s.spilled - i.spilled);
}

} // namespace icsbed::physics
