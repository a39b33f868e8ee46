#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "icsbed/physics/plant.hpp"

using namespace icsbed;
using namespace icsbed::physics;

namespace {

struct Rig {
    SharedIO io;
    Plant plant;

    explicit Rig(PlantInitial init = {}, PlantParams params = {}, std::uint64_t seed = 1)
        : plant(params, init, io, Rng{seed})
    {
    }

    void actuate(bool in, bool out, bool belt)
    {
        io.write(Side::Plc, kInputValve, in ? 1.0 : 0.0);
        io.write(Side::Plc, kOutputValve, out ? 1.0 : 0.0);
        io.write(Side::Plc, kBeltEngine, belt ? 1.0 : 0.0);
    }
    void ticks(int n)
    {
        for (int i = 0; i < n; ++i) plant.tick();
    }
};

} // namespace

TEST_CASE("tank fills 15 -> 17 L in 10 s with only the inlet open")
{
    Rig r{PlantInitial{15.0, 0.0, 0.1}};
    r.actuate(true, false, false);
    r.ticks(200);
    CHECK(std::abs(r.plant.state().tank_level - 17.0) <= 1e-6);
}

TEST_CASE("empty bottle at the filler is full after 15 s")
{
    Rig r{PlantInitial{20.0, 0.0, 0.0}};
    r.actuate(false, true, false);
    int n = 0;
    while (r.plant.state().bottle_level < r.plant.params().bottle_capacity() - 1e-9 && n < 1000) {
        r.plant.tick();
        ++n;
    }
    const double t = n * 0.05;
    CHECK(std::abs(t - 15.0) <= 0.05 + 1e-9);
    CHECK(r.plant.state().spilled == doctest::Approx(0.0));
}

TEST_CASE("belt carries a bottle 0.2 m to the filler in 4 s")
{
    Rig r{PlantInitial{12.0, 0.0, 0.2}};
    r.actuate(false, false, true);
    int n = 0;
    while (r.plant.state().bottle_distance > 0.0 && n < 1000) {
        r.plant.tick();
        ++n;
    }
    CHECK(std::abs(n * 0.05 - 4.0) <= 0.05 + 1e-9);
}

TEST_CASE("a stopped bottle departs when the belt restarts")
{
    Rig r{PlantInitial{12.0, 1.5, 0.0}};
    r.actuate(false, false, false);
    r.ticks(1);
    CHECK(r.plant.state().bottle_resting);
    r.actuate(false, false, true);
    r.ticks(1);
    CHECK(r.plant.state().bottles_filled == 1);
    CHECK(r.plant.state().bottle_level == 0.0);
    CHECK(r.plant.state().bottle_distance == doctest::Approx(0.2));

    // A bottle that just arrived with the belt running waits at the filler.
    r.ticks(80);
    CHECK(r.plant.state().bottle_distance == 0.0);
    r.ticks(5);
    CHECK(r.plant.state().bottles_departed == 1);

    // Partially filled bottles leave but are not counted.
    r.actuate(false, false, false);
    r.ticks(1);
    r.plant.mutable_state().bottle_level = 0.5;
    r.actuate(false, false, true);
    r.ticks(1);
    CHECK(r.plant.state().bottles_departed == 2);
    CHECK(r.plant.state().bottles_filled == 1);
}

TEST_CASE("outlet with no bottle under the filler spills")
{
    Rig r{PlantInitial{10.0, 0.0, 0.1}};
    r.actuate(false, true, false);
    r.ticks(20);
    CHECK(r.plant.state().tank_level == doctest::Approx(9.9));
    CHECK(r.plant.state().spilled == doctest::Approx(0.1));
    CHECK(r.plant.state().bottle_level == 0.0);
}

TEST_CASE("flow sensor reads outlet flow only while the valve is open and the tank is not empty")
{
    Rig r{PlantInitial{0.01, 0.0, 0.0}};
    r.actuate(false, true, false);
    r.plant.read_actuators();
    CHECK(r.plant.true_value(kOutputFlow) == doctest::Approx(0.1));
    r.ticks(5);
    CHECK(r.plant.state().tank_level == 0.0);
    CHECK(r.plant.true_value(kOutputFlow) == 0.0);
    CHECK(r.io.read(kOutputFlow) == 0.0);
}

TEST_CASE("no PLC running: plant holds still")
{
    Rig r{PlantInitial{12.0, 0.3, 0.1}};
    const auto before = r.plant.state();
    r.ticks(100);
    CHECK(r.plant.state().tank_level == before.tank_level);
    CHECK(r.plant.state().bottle_level == before.bottle_level);
    CHECK(r.plant.state().bottle_distance == before.bottle_distance);
}

TEST_CASE("zero dt changes nothing")
{
    Rig r{PlantInitial{12.0, 0.3, 0.1}};
    r.actuate(true, true, true);
    r.plant.read_actuators();
    const auto before = r.plant.state();
    r.plant.step(Duration{0});
    CHECK(r.plant.state() == before);
}

TEST_CASE("actuator flip changes slope at the next tick boundary")
{
    Rig r{PlantInitial{12.0, 0.0, 0.1}};
    r.actuate(true, false, false);
    r.ticks(10); // +0.1 L
    r.actuate(false, true, false);
    // SharedIO changed, state not yet: slope flips only when tick() adopts it
    CHECK(r.plant.state().input_valve_open);
    r.ticks(10); // -0.05 L, spilled
    CHECK(r.plant.state().tank_level == doctest::Approx(12.05).epsilon(1e-12));
}

TEST_CASE("sensor readings stay within the relative error band")
{
    Rig r{PlantInitial{20.0, 1.0, 0.1}};
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 10000; ++i) {
        const double v = r.plant.sample_sensor(kTankLevel);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        const double b = r.plant.sample_sensor(kBottleLevel);
        const double d = r.plant.sample_sensor(kBottleDistance);
        REQUIRE(std::abs(v - 20.0) <= 0.01 * 20.0 + 1e-12);
        REQUIRE(std::abs(b - 1.0) <= 0.01 * 1.0 + 1e-12);
        REQUIRE(std::abs(d - 0.1) <= 0.05 * 0.1 + 1e-12);
    }
    CHECK(lo >= 19.8);
    CHECK(hi <= 20.2);
    CHECK(hi - lo > 0.35); // the band is actually used
}

TEST_CASE("zero-error sensors read the truth exactly")
{
    PlantParams p;
    p.tank_level_error = 0.0;
    Rig r{PlantInitial{20.0, 0.0, 0.1}, p};
    for (int i = 0; i < 100; ++i) {
        REQUIRE(r.plant.sample_sensor(kTankLevel) == 20.0);
    }
    r.plant.set_sensor_error(kTankLevel, 0.5);
    double hi = 0;
    for (int i = 0; i < 1000; ++i) hi = std::max(hi, r.plant.sample_sensor(kTankLevel));
    CHECK(hi > 25.0);
    CHECK(hi <= 30.0);
    CHECK_THROWS_AS(r.plant.set_sensor_error(kInputValve, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(r.plant.sample_sensor("no_such_sensor"), std::invalid_argument);
}

TEST_CASE("same seed gives the same readings")
{
    Rig a{{}, {}, 9}, b{{}, {}, 9}, c{{}, {}, 10};
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.plant.sample_sensor(kTankLevel);
        REQUIRE(x == b.plant.sample_sensor(kTankLevel));
        differs |= x != c.plant.sample_sensor(kTankLevel);
    }
    CHECK(differs);
}

TEST_CASE("shared I/O enforces one writer per entry")
{
    SharedIO io;
    Plant::declare_entries(io);
    CHECK_THROWS_AS(io.write(Side::Plc, kTankLevel, 1.0), std::logic_error);
    CHECK_THROWS_AS(io.write(Side::Plant, kInputValve, 1.0), std::logic_error);
    CHECK_THROWS_AS(io.read("nope"), std::out_of_range);
    CHECK(io.names().size() == 7);
}

TEST_CASE("mass is conserved and bounds hold under random actuation")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng{seed};
        Rig r{PlantInitial{rng.uniform(0, 30), rng.uniform(0, 1.5), rng.uniform(0, 0.2)}};
        for (int i = 0; i < 6000; ++i) { // 300 s
            if (rng.below(10) == 0) {
                r.actuate(rng.below(2), rng.below(2), rng.below(2));
            }
            r.plant.tick();
            const auto& s = r.plant.state();
            REQUIRE(s.tank_level >= 0.0);
            REQUIRE(s.tank_level <= 30.0);
            REQUIRE(s.bottle_level >= 0.0);
            REQUIRE(s.bottle_level <= 1.5);
            REQUIRE(s.bottle_distance >= 0.0);
            REQUIRE(s.bottle_distance <= 0.2 + 1e-12);
        }
        CHECK(std::abs(r.plant.mass_balance_residual()) <= 1e-9);
    }
}

TEST_CASE("event-driven ticks land on exact 50 ms boundaries")
{
    EventQueue q;
    Rig r{PlantInitial{15.0, 0.0, 0.1}};
    r.actuate(true, false, false);
    r.plant.start(q);
    q.run_until(SimTime{10s});
    CHECK(r.plant.ticks() == 200);
    CHECK(std::abs(r.plant.state().tank_level - 17.0) <= 1e-6);
}

TEST_CASE("parameter validation")
{
    PlantParams p;
    CHECK_NOTHROW(p.validate());
    p.belt_speed = 0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("belt_speed"), std::invalid_argument);
    p = {};
    p.tank_level_error = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
