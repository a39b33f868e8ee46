// icsbed: batch runs, config validation, live serving and attack launching.
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "icsbed/gateway/client.hpp"
#include "icsbed/gateway/live.hpp"
#include "icsbed/gateway/server.hpp"
#include "icsbed/scenario/simulation.hpp"

using namespace icsbed;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int)
{
    g_interrupted = true;
}

scenario::ScenarioConfig load(const std::string& path)
{
    return path.empty() ? scenario::bottle_plant_scenario() : scenario::load_config(path);
}

int cmd_validate(const std::string& path, bool render)
{
    try {
        const auto c = load(path);
        if (render) {
            std::cout << scenario::render_text(c) << "\n";
        } else {
            std::cout << "ok: " << c.name << ", " << to_seconds(c.duration) << " s, seed " << c.seed << ", "
                      << c.attacks.size() << " attack(s)\n";
        }
        return kOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

int cmd_run(const std::string& path, std::string out, std::optional<std::uint64_t> seed, bool quiet)
{
    scenario::ScenarioConfig c;
    try {
        c = load(path);
        if (seed) c.seed = *seed;
        scenario::validate(c);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    if (out.empty()) out = "out/" + c.name;
    std::unique_ptr<scenario::Simulation> sim;
    try {
        sim = std::make_unique<scenario::Simulation>(c, std::filesystem::path(out));
        if (!quiet) {
            sim->on_event([](const scenario::SimEvent& e) {
                if (e.source == "attacker" || e.source == "scenario") {
                    std::cerr << observer::seconds6(e.time) << " " << e.source << ": " << e.message << "\n";
                }
            });
        }
        const auto s = sim->run();
        std::cout << s.to_json().dump(2) << "\n";
        if (!quiet) std::cerr << "outputs in " << out << "\n";
        return kOk;
    } catch (const std::exception& e) {
        if (sim) sim->mark_incomplete(e.what());
        std::cerr << "run failed: " << e.what() << "\n";
        return kRuntime;
    }
}

int cmd_serve(const std::string& path, const std::string& host, std::uint16_t port, double speed,
              const std::string& out)
{
    scenario::ScenarioConfig c;
    try {
        c = load(path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    try {
        gateway::LiveOptions opt;
        opt.speed = speed;
        std::optional<std::filesystem::path> dir;
        if (!out.empty()) dir = out;
        gateway::LiveSimulation live(c, dir, opt);
        gateway::GatewayServer server(live, host, port);
        server.start();
        live.start();
        std::cerr << "serving " << c.name << " on http://" << host << ":" << server.port() << " (speed " << speed
                  << "x, " << to_seconds(c.duration) << " s)\n";
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_interrupted && !live.halted()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        if (live.halted()) {
            std::cerr << "run reached its end; serving final state until interrupted\n";
            while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
        live.stop();
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "serve failed: " << e.what() << "\n";
        return kRuntime;
    }
}

json param_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;
    }
}

void print_recon(const json& outcome)
{
    std::printf("%-16s %-18s %s\n", "IP", "MAC", "OPEN PORTS");
    for (const auto& h : outcome["hosts"]) {
        std::string ports;
        for (const auto& p : h["open_ports"]) {
            if (!ports.empty()) ports += ",";
            ports += std::to_string(p.get<int>());
        }
        std::printf("%-16s %-18s %s\n", h["ip"].get<std::string>().c_str(), h["mac"].get<std::string>().c_str(),
                    ports.empty() ? "-" : ports.c_str());
    }
}

int cmd_attack(const std::string& kind, const std::string& gateway_addr, const std::vector<std::string>& sets,
               const std::string& raw, bool wait, double timeout_s)
{
    json cfg = json::object();
    if (!raw.empty()) {
        try {
            cfg = json::parse(raw);
        } catch (const json::exception& e) {
            std::cerr << "--json: " << e.what() << "\n";
            return kInvalid;
        }
    }
    if (!kind.empty()) cfg["kind"] = kind;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "--set expects key=value, got \"" << s << "\"\n";
            return kInvalid;
        }
        cfg[s.substr(0, eq)] = param_value(s.substr(eq + 1));
    }
    const auto colon = gateway_addr.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--gateway expects host:port\n";
        return kInvalid;
    }
    const auto host = gateway_addr.substr(0, colon);
    std::uint16_t port = 0;
    try {
        port = static_cast<std::uint16_t>(std::stoi(gateway_addr.substr(colon + 1)));
    } catch (const std::exception&) {
        std::cerr << "--gateway: bad port\n";
        return kInvalid;
    }

    try {
        const auto res = gateway::http_request(host, port, "POST", "/api/attacks", cfg.dump());
        if (res.status == 400) {
            std::cerr << "rejected: " << json::parse(res.body).value("error", res.body) << "\n";
            return kInvalid;
        }
        if (res.status != 202) {
            std::cerr << "gateway answered " << res.status << ": " << res.body << "\n";
            return kRuntime;
        }
        const auto accepted = json::parse(res.body);
        const int id = accepted["id"].get<int>();
        std::cerr << "attack " << id << " (" << accepted["kind"].get<std::string>() << ") accepted\n";
        const bool recon = accepted["kind"] == "recon";
        if (!wait && !recon) {
            std::cout << accepted.dump() << "\n";
            return kOk;
        }
        const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
        while (std::chrono::steady_clock::now() < until) {
            const auto h = gateway::http_request(host, port, "GET", "/api/attacks");
            if (h.status == 200) {
                for (const auto& r : json::parse(h.body)) {
                    if (r["id"] != id || r["end"].is_null()) continue;
                    if (recon) {
                        print_recon(r["outcome"]);
                    } else {
                        std::cout << r.dump(2) << "\n";
                    }
                    return kOk;
                }
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(200));
        }
        std::cerr << "attack " << id << " did not finish within " << timeout_s << " s\n";
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "attack failed: " << e.what() << "\n";
        return kRuntime;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ICS testbed: bottle filling plant on an emulated Modbus/TCP network"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario in virtual time and write the observer files");
    run->add_option("-c,--config", config, "Scenario file (default: built-in bottle plant with DDoS)");
    run->add_option("-o,--out", out, "Output directory (default: out/<name>)");
    run->add_option("-s,--seed", seed, "Override the scenario seed");
    run->add_flag("-q,--quiet", quiet, "Only print the summary");

    std::string vconfig;
    bool render = false;
    auto* validate = app.add_subcommand("validate", "Parse and check a scenario file");
    validate->add_option("config,-c,--config", vconfig, "Scenario file")->required();
    validate->add_flag("--render", render, "Print the config with every default filled in");

    std::string sconfig;
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;
    double speed = 1.0;
    std::string sout;
    auto* serve = app.add_subcommand("serve", "Run a scenario paced to the wall clock behind the HTTP/WS gateway");
    serve->add_option("-c,--config", sconfig, "Scenario file (default: built-in bottle plant with DDoS)");
    serve->add_option("-p,--port", port, "Listen port")->capture_default_str();
    serve->add_option("--host", host, "Listen address")->capture_default_str();
    serve->add_option("--speed", speed, "Virtual seconds per wall second")->capture_default_str()->check(CLI::PositiveNumber);
    serve->add_option("-o,--out", sout, "Write the observer files here");

    std::string kind;
    std::string gw = "127.0.0.1:8080";
    std::vector<std::string> sets;
    std::string raw;
    bool wait = false;
    double timeout = 120.0;
    auto* attack = app.add_subcommand("attack", "Launch an attack against a running serve instance");
    attack->add_option("-k,--kind", kind, "recon, ddos, mitm, replay or sensor_degradation");
    attack->add_option("-g,--gateway", gw, "Gateway host:port")->capture_default_str();
    attack->add_option("--set", sets, "Attack parameter key=value (value parsed as JSON when possible)");
    attack->add_option("--json", raw, "Full attack config as JSON");
    attack->add_flag("-w,--wait", wait, "Wait for the attack to finish and print its record");
    attack->add_option("--timeout", timeout, "Seconds to wait")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    if (*run) return cmd_run(config, out, seed, quiet);
    if (*validate) return cmd_validate(vconfig, render);
    if (*serve) return cmd_serve(sconfig, host, port, speed, sout);
    if (*attack) {
        if (kind.empty() && raw.empty()) {
            std::cerr << "attack needs --kind or --json\n";
            return kInvalid;
        }
        return cmd_attack(kind, gw, sets, raw, wait, timeout);
    }
    return kInvalid;
}
