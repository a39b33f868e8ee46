#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "icsbed/net/clock.hpp"
#include "icsbed/net/rng.hpp"
#include "icsbed/physics/shared_io.hpp"

namespace icsbed::physics {

// Sensor entries (plant writes).
inline constexpr std::string_view kTankLevel = "tank_level_value";
inline constexpr std::string_view kOutputFlow = "tank_output_flow_value";
inline constexpr std::string_view kBottleLevel = "bottle_level_value";
inline constexpr std::string_view kBottleDistance = "bottle_distance_to_filler_value";

// Actuator entries (PLCs write).
inline constexpr std::string_view kInputValve = "tank_input_valve_state";
inline constexpr std::string_view kOutputValve = "tank_output_valve_state";
inline constexpr std::string_view kBeltEngine = "conveyor_belt_engine_state";

struct PlantParams {
    int tank_levels = 10;
    double tank_level_capacity = 3.0; // L per level
    double tank_inlet_flow = 0.2;     // L/s
    double tank_outlet_flow = 0.1;    // L/s
    int bottle_levels = 2;
    double bottle_level_capacity = 0.75; // L per level
    double bottle_spacing = 0.2;         // m
    double belt_speed = 0.05;            // m/s

    // Uniform relative sensor error.
    double tank_level_error = 0.01;
    double bottle_level_error = 0.01;
    double bottle_distance_error = 0.05;

    Duration tick = 50ms;
    /// A bottle closer than this to the filler counts as under it.
    double filler_epsilon = 0.005;
    /// Fraction of capacity a departing bottle needs to count as filled.
    double full_fraction = 0.98;

    double tank_capacity() const { return tank_levels * tank_level_capacity; }
    double bottle_capacity() const { return bottle_levels * bottle_level_capacity; }

    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;

    bool operator==(const PlantParams&) const = default;
};

struct PlantState {
    double tank_level = 0.0;
    bool input_valve_open = false;
    bool output_valve_open = false;
    bool belt_running = false;
    double bottle_level = 0.0;
    double bottle_distance = 0.0;
    std::uint64_t bottles_filled = 0;
    double spilled = 0.0;

    // Bookkeeping for mass balance.
    std::uint64_t bottles_departed = 0;
    double shipped = 0.0;    // volume carried away in departed bottles
    double inlet_total = 0.0; // volume admitted through the inlet valve
    /// Set once the bottle has stood at the filler with the belt stopped;
    /// only then does restarting the belt carry it away.
    bool bottle_resting = false;

    bool operator==(const PlantState&) const = default;
};

struct PlantInitial {
    double tank_level = 12.0;
    double bottle_level = 0.0;
    double bottle_distance = 0.0;

    bool operator==(const PlantInitial&) const = default;
};

/// Bottle-filling process: a tank with an inlet and an outlet valve above a
/// conveyor carrying bottles to the filler.
class Plant {
public:
    Plant(PlantParams params, PlantInitial initial, SharedIO& io, Rng sensor_rng);

    /// Declares the plant's sensor and actuator entries in `io`.
    static void declare_entries(SharedIO& io);

    /// Adopts actuators from SharedIO, integrates one tick, samples sensors.
    void tick();

    /// Advances the state by dt with the current actuator truths.
    void step(Duration dt);
    void read_actuators();
    /// Noisy reading of one sensor, also written into SharedIO. Throws
    /// std::invalid_argument for names that are not plant sensors.
    double sample_sensor(std::string_view name);
    void sample_all();

    /// Noise-free value behind a sensor.
    double true_value(std::string_view name) const;

    void set_sensor_error(std::string_view name, double fraction);
    void clear_sensor_error(std::string_view name);
    double sensor_error(std::string_view name) const;

    /// Schedules tick() every params.tick starting one tick after `start`, and
    /// samples sensors at `start`.
    void start(EventQueue& events, SimTime start = SimTime{0});

    const PlantState& state() const { return state_; }
    PlantState& mutable_state() { return state_; }
    const PlantParams& params() const { return params_; }
    std::uint64_t ticks() const { return ticks_; }

    /// inlet_total − Δtank − Δbottles − shipped − spilled; zero up to rounding.
    double mass_balance_residual() const;

private:
    void schedule_next(EventQueue& events);

    PlantParams params_;
    PlantState state_;
    PlantState initial_;
    SharedIO& io_;
    Rng sensor_rng_;
    std::map<std::string, double, std::less<>> error_override_;
    std::uint64_t ticks_ = 0;
};

} // namespace icsbed::physics
