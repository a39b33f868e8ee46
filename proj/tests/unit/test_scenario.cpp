#include <doctest.h>

#include <sstream>
#include <stdexcept>

#include "icsbed/observer/dissect.hpp"
#include "icsbed/scenario/simulation.hpp"
#include "temp_dir.hpp"

using namespace icsbed;
using namespace icsbed::scenario;
using icsbed::testing::slurp;
using icsbed::testing::TempDir;
using nlohmann::json;

namespace {

std::string shipped(const std::string& name)
{
    return std::string(ICSBED_SOURCE_DIR) + "/configs/" + name;
}

std::string error_of(const json& j)
{
    try {
        (void)parse_config(j);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

std::size_t line_count(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_CASE("empty config is the 120 s normal-operation scenario")
{
    const auto c = parse_config(json::object());
    CHECK(c == default_scenario());
    CHECK(c.duration == 120s);
    CHECK(c.attacks.empty());
    CHECK(c.nodes.size() == 5);
    CHECK(c.node(Role::Plc1).ip.to_string() == "192.168.0.11");
    CHECK(c.node(Role::Attacker).mac.to_string() == "AA:BB:CC:00:00:41");
}

TEST_CASE("render and parse round-trip")
{
    auto c = bottle_plant_scenario();
    c.seed = 0xdeadbeefcafeULL;
    c.hmi2_script.push_back({SimTime{5s}, "tank_level_max", 18.5});
    c.signal_addresses["tank_level_value"] = 6;
    c.signal_addresses["tank_level_max"] = 4;
    auto mitm = attack::default_attack(attack::AttackKind::Mitm);
    mitm.start = 10s;
    attack::InjectionRule rule;
    rule.signal = "tank_input_valve_mode";
    mitm.rules.push_back(rule);
    c.attacks.push_back(mitm);
    c.plc1.initial["tank_level_max"] = 22.0;
    const auto back = parse_config(render(c));
    CHECK(back == c);
    CHECK(parse_config_text(render_text(c)) == c);
}

TEST_CASE("shipped configs validate and round-trip")
{
    for (const auto* name : {"bottle_plant.json", "normal.json", "recon.json", "mitm.json", "replay.json", "sensor.json"}) {
        CAPTURE(name);
        const auto c = load_config(shipped(name));
        CHECK(parse_config(render(c)) == c);
    }
    auto bp = load_config(shipped("bottle_plant.json"));
    CHECK(bp == bottle_plant_scenario());
}

TEST_CASE("DDoS timeline row is accepted")
{
    const auto c = parse_config_text(R"({"attacks": [{"start": 60, "kind": "ddos", "target": "plc1", "agents": 800, "duration": 60}]})");
    REQUIRE(c.attacks.size() == 1);
    CHECK(c.attacks[0].kind == attack::AttackKind::Ddos);
    CHECK(c.attacks[0].start == 60s);
    CHECK(c.attacks[0].agents == 800);
    CHECK(c.attacks[0].duration == 60s);
}

TEST_CASE("attack windows must fit inside the run")
{
    CHECK(error_of(json::parse(R"({"duration": 30, "attacks": [{"start": 40, "kind": "recon"}]})")).find("attacks[0].start") !=
          std::string::npos);
    CHECK(!error_of(json::parse(R"({"duration": 30, "attacks": [{"start": 20, "kind": "ddos", "duration": 20}]})")).empty());
    CHECK(error_of(json::parse(R"({"duration": 30, "attacks": [{"start": 10, "kind": "ddos", "duration": 20}]})")).empty());
}

TEST_CASE("diagnostics name the offending key")
{
    CHECK(error_of(json::parse(R"({"durattion": 30})")).find("durattion") != std::string::npos);
    CHECK(error_of(json::parse(R"({"plant": {"tank_levels": "ten"}})")).find("plant.tank_levels") != std::string::npos);
    CHECK(error_of(json::parse(R"({"plcs": {"plc1": {"loop_period": -1}}})")).find("plcs.plc1.loop_period") !=
          std::string::npos);
    CHECK(error_of(json::parse(R"({"attacks": [{"kind": "nuke"}]})")).find("nuke") != std::string::npos);
    CHECK(error_of(json::parse(R"({"attacks": [{"kind": "ddos", "target": "hmi1"}]})")).find("target") !=
          std::string::npos);
    CHECK(error_of(json::parse(R"({"hmi2": {"script": [{"at": 1, "signal": "tank_levl_max", "value": 3}]}})"))
              .find("tank_levl_max") != std::string::npos);
    CHECK(error_of(json::parse(R"({"pacing": "fast"})")).find("pacing") != std::string::npos);
    // Duplicate address.
    CHECK(!error_of(json::parse(R"({"nodes": [{"name": "plc1", "role": "plc1", "ip": "192.168.0.11"},
        {"name": "plc2", "role": "plc2", "ip": "192.168.0.11"}, {"name": "hmi1", "role": "hmi1", "ip": "192.168.0.21"},
        {"name": "hmi2", "role": "hmi2", "ip": "192.168.0.22"}, {"name": "attacker", "role": "attacker", "ip": "192.168.0.41"}]})"))
               .empty());
    // The attacker cannot be a MITM victim.
    CHECK(!error_of(json::parse(R"({"attacks": [{"kind": "mitm", "victims": ["attacker", "plc1"]}]})")).empty());
    CHECK_THROWS_AS(parse_config_text("{ not json"), std::invalid_argument);
}

TEST_CASE("60 s normal run writes every output file")
{
    TempDir dir;
    auto c = default_scenario();
    c.duration = 60s;
    Simulation sim(c, dir.path());
    CHECK(std::filesystem::exists(dir / "INCOMPLETE"));
    const auto s = sim.run();

    for (const auto* f : {"capture.pcap", "state_plc1.csv", "state_plc2.csv", "metrics.csv", "attacks.jsonl", "events.log"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    CHECK_FALSE(std::filesystem::exists(dir / "INCOMPLETE"));
    CHECK(s.loops_plc1 == 300);
    CHECK(s.loops_plc2 == 300);
    CHECK(line_count(slurp(dir / "state_plc1.csv")) == 301);
    CHECK(line_count(slurp(dir / "state_plc2.csv")) == 301);
    CHECK(s.bottles_filled >= 2);
    CHECK(s.attacks == 0);
    CHECK(s.frames == observer::read_pcap(dir / "capture.pcap").size());
    CHECK(s.end == 60s);
    CHECK(slurp(dir / "attacks.jsonl").empty());

    std::size_t arp = 0, adus = 0, bad = 0;
    SimTime last{0};
    for (const auto& d : observer::dissect_capture(dir / "capture.pcap")) {
        arp += d.arp.has_value();
        adus += d.adus.size();
        bad += !d.malformed.empty();
        CHECK(d.ts >= last);
        last = d.ts;
    }
    CHECK(arp >= 4);
    CHECK(adus > 1000);
    CHECK(bad == 0);

    // Loop indices have no gaps.
    std::istringstream in(slurp(dir / "state_plc1.csv"));
    std::string line;
    std::getline(in, line);
    std::uint64_t expect = 0;
    while (std::getline(in, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        const auto c2 = line.find(',', b + 1);
        CHECK(std::stoull(line.substr(b + 1, c2 - b - 1)) == expect++);
    }
}

TEST_CASE("identical configs give identical summaries and bytes")
{
    auto c = load_config(shipped("mitm.json"));
    c.duration = 40s;
    TempDir a, b;
    const auto sa = Simulation(c, a.path()).run();
    const auto sb = Simulation(c, b.path()).run();
    CHECK(sa == sb);
    for (const auto* f : {"capture.pcap", "state_plc1.csv", "state_plc2.csv", "metrics.csv", "attacks.jsonl", "events.log"}) {
        CAPTURE(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }

    c.seed = 2;
    TempDir d;
    (void)Simulation(c, d.path()).run();
    CHECK(slurp(a / "capture.pcap") != slurp(d / "capture.pcap"));
}

TEST_CASE("metrics attack tags match the attack log intervals")
{
    auto c = default_scenario();
    c.duration = 20s;
    auto sensor = attack::default_attack(attack::AttackKind::SensorDegradation);
    sensor.start = 5s;
    sensor.duration = 5s;
    c.attacks.push_back(sensor);
    TempDir dir;
    Simulation(c, dir.path()).run();

    const auto rec = json::parse(slurp(dir / "attacks.jsonl"));
    const auto start = SimTime{rec["start"].get<std::int64_t>()};
    const auto end = SimTime{rec["end"].get<std::int64_t>()};
    CHECK(start == 5s);
    CHECK(end == 10s);
    CHECK(rec["kind"] == "sensor_degradation");
    CHECK(rec["truncated"] == false);

    std::istringstream in(slurp(dir / "metrics.csv"));
    std::string line;
    std::getline(in, line);
    int tagged = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string x;
        while (std::getline(ss, x, ',')) f.push_back(x);
        if (line.back() == ',') f.push_back("");
        REQUIRE(f.size() == 9);
        const auto t = from_seconds(std::stod(f[1]));
        const bool inside = t >= start && t <= end;
        CHECK((f[7] == "attack") == inside);
        CHECK((f[8] == "1") == inside);
        tagged += inside;
    }
    CHECK(tagged > 0);
}

TEST_CASE("open attacks are closed and flagged at run end")
{
    auto c = default_scenario();
    c.duration = 10s;
    auto d = attack::default_attack(attack::AttackKind::Ddos);
    d.start = 5s;
    d.duration = 5s;
    d.agents = 4;
    c.attacks.push_back(d);
    Simulation sim(c);
    const auto s = sim.run();
    CHECK(s.attacks == 1);
    const auto list = sim.attacks_json();
    REQUIRE(list.size() == 1);
    CHECK(list[0]["end"] == 10'000'000);
    CHECK(sim.finished());
}

TEST_CASE("operator commands and telemetry")
{
    auto c = default_scenario();
    c.duration = 10s;
    Simulation sim(c);
    sim.keep_rows(true);
    sim.run_until(SimTime{2s});
    CHECK_THROWS_AS(sim.command("no_such_signal", 1.0), CommandError);
    CHECK_THROWS_AS(sim.command("tank_level_value", 1.0), CommandConflict);
    CHECK_THROWS_AS(sim.command("tank_level_max", std::nan("")), CommandError);

    bool acked = false;
    sim.command("tank_level_max", 25.0, [&](const modbus::ClientResult& r) { acked = r.error == modbus::ClientError::None; });
    sim.run_until(SimTime{2500ms});
    CHECK(acked);
    const auto snap = sim.snapshot();
    CHECK(snap["signals"].size() == 13);
    CHECK(snap["signals"]["tank_level_max"] == doctest::Approx(25.0));
    CHECK(snap["virtual_time_us"] == 2'500'000);
    CHECK(snap["plant"].contains("bottles_filled"));
    CHECK(snap["metrics"]["logic_execution_delay"].contains("plc1"));
    CHECK(sim.signals_json().size() == 13);

    const auto m = sim.metrics_json(SimTime{2s});
    for (const auto& d : m["logic_execution_delay"]) CHECK(d["time_s"].get<double>() >= 2.0);
    CHECK(!m["logic_execution_delay"].empty());

    sim.run();
    CHECK_THROWS_AS(sim.command("tank_level_max", 20.0), CommandConflict);
}
