#include "icsbed/scenario/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace icsbed::scenario {

using nlohmann::json;

namespace {

constexpr const char* kIncomplete = "INCOMPLETE";

double ms(Duration d)
{
    return to_millis(d);
}

} // namespace

json RunSummary::to_json() const
{
    return json{{"scenario", scenario},
                {"seed", seed},
                {"end_s", to_seconds(end)},
                {"loops", {{"plc1", loops_plc1}, {"plc2", loops_plc2}}},
                {"frames", frames},
                {"attacks", attacks},
                {"bottles_filled", bottles_filled},
                {"bottles_departed", bottles_departed},
                {"spilled_l", spilled},
                {"events", events},
                {"max_delay_ms", {{"plc1", max_delay_ms_plc1}, {"plc2", max_delay_ms_plc2}}}};
}

Simulation::Simulation(ScenarioConfig config, std::optional<std::filesystem::path> output_dir)
    : config_(std::move(config)), out_dir_(std::move(output_dir)), signals_(build_signal_map(config_))
{
    validate(config_);
    const auto seed = config_.seed;

    if (out_dir_) {
        std::filesystem::create_directories(*out_dir_);
        mark_incomplete("run in progress");
        pcap_ = std::make_unique<observer::PcapWriter>(*out_dir_ / "capture.pcap");
        attack_log_ = std::make_unique<observer::AttackLog>(*out_dir_ / "attacks.jsonl");
        event_log_ = std::make_unique<observer::EventLog>(*out_dir_ / "events.log");
    }

    switch_ = std::make_unique<net::Switch>(events_, config_.network, derive_stream(seed, "switch"));
    switch_->add_tap([this](const net::EthernetFrame& f, SimTime t) {
        ++frames_;
        if (pcap_) pcap_->capture(f, t);
    });
    for (const auto& n : config_.nodes) {
        nics_.push_back(std::make_unique<net::Nic>(events_, n.name, n.mac, n.ip));
        nics_.back()->attach(*switch_);
        stacks_.push_back(std::make_unique<tcp::TcpStack>(events_, *nics_.back(), derive_stream(seed, "isn/" + n.name)));
    }

    plant_ = std::make_unique<physics::Plant>(config_.plant, config_.initial, io_, derive_stream(seed, "plant/sensors"));

    const auto& n1 = config_.node(Role::Plc1);
    const auto& n2 = config_.node(Role::Plc2);
    plc1_ = std::make_unique<control::Plc>(1, n1.name, stack(Role::Plc1), io_, signals_, config_.plc1,
                                           derive_stream(seed, "cpu/plc1"));
    plc2_ = std::make_unique<control::Plc>(2, n2.name, stack(Role::Plc2), io_, signals_, config_.plc2,
                                           derive_stream(seed, "cpu/plc2"));
    plc1_->set_peer(n2.name, tcp::Endpoint{n2.ip, config_.plc2.port});
    plc2_->set_peer(n1.name, tcp::Endpoint{n1.ip, config_.plc1.port});

    control::PlcDirectory dir{{{1, n1.name}, {2, n2.name}},
                              {{1, tcp::Endpoint{n1.ip, config_.plc1.port}}, {2, tcp::Endpoint{n2.ip, config_.plc2.port}}}};
    hmi1_ = std::make_unique<control::HmiPoller>(config_.node(Role::Hmi1).name, stack(Role::Hmi1), signals_, dir,
                                                 config_.hmi1_poll_period);
    hmi2_ = std::make_unique<control::HmiWriter>(config_.node(Role::Hmi2).name, stack(Role::Hmi2), signals_, dir);

    std::vector<attack::HostInfo> hosts;
    for (const auto& n : config_.nodes) {
        if (n.role == Role::Attacker) continue;
        hosts.push_back(attack::HostInfo{n.name, n.ip, n.role == Role::Plc1 ? 1 : n.role == Role::Plc2 ? 2 : 0});
    }
    attacker_ = std::make_unique<attack::Attacker>(nic(Role::Attacker), stack(Role::Attacker), signals_,
                                                   std::move(hosts), plant_.get(), derive_stream(seed, "attacker"));

    if (out_dir_) {
        state1_ = std::make_unique<observer::StateLog>(*out_dir_ / "state_plc1.csv", plc1_->columns());
        state2_ = std::make_unique<observer::StateLog>(*out_dir_ / "state_plc2.csv", plc2_->columns());
    }

    auto sink = [this](std::string_view src, std::string_view msg) { record_event(src, msg); };
    for (auto* p : {plc1_.get(), plc2_.get()}) {
        p->on_event(sink);
        p->on_delay([this](const control::DelaySample& s) {
            metrics_.delays.push_back(s);
            last_delay_[s.plc] = s;
        });
        p->on_response([this](const control::ResponseSample& s) {
            metrics_.responses.push_back(s);
            last_response_[s.client + "->" + s.server] = s;
        });
    }
    plc1_->on_row([this](const control::StateRow& r) {
        ++loops1_;
        if (state1_) state1_->write(r);
        if (keep_rows_) rows1_.push_back(r);
    });
    plc2_->on_row([this](const control::StateRow& r) {
        ++loops2_;
        if (state2_) state2_->write(r);
        if (keep_rows_) rows2_.push_back(r);
    });
    for (control::HmiBase* h : {static_cast<control::HmiBase*>(hmi1_.get()), static_cast<control::HmiBase*>(hmi2_.get())}) {
        h->on_response([this](const control::ResponseSample& s) {
            metrics_.responses.push_back(s);
            last_response_[s.client + "->" + s.server] = s;
        });
    }
    attacker_->on_event(sink);
    attacker_->on_record([this](const attack::AttackRecord& r) {
        if (attack_log_) attack_log_->write(r);
    });

    plant_->start(events_);
    plc1_->start();
    plc2_->start();
    hmi1_->start(SimTime{0});
    hmi2_->run_script(config_.hmi2_script);
    for (const auto& a : config_.attacks) {
        attacker_->launch(a);
    }
    record_event("scenario", "run started: " + config_.name + " seed " + std::to_string(seed));
}

Simulation::~Simulation() = default;

std::size_t Simulation::index_of(Role r) const
{
    for (std::size_t i = 0; i < config_.nodes.size(); ++i) {
        if (config_.nodes[i].role == r) return i;
    }
    throw std::invalid_argument(std::string("no node with role ") + to_string(r));
}

net::Nic& Simulation::nic(Role r)
{
    return *nics_[index_of(r)];
}

tcp::TcpStack& Simulation::stack(Role r)
{
    return *stacks_[index_of(r)];
}

void Simulation::record_event(std::string_view source, std::string_view message)
{
    SimEvent e{events_.now(), std::string(source), std::string(message)};
    if (event_log_) event_log_->write(e.time, e.source, e.message);
    history_.push_back(e);
    if (event_listener_) event_listener_(e);
}

void Simulation::run_until(SimTime t)
{
    if (finished_) return;
    events_.run_until(std::min(t, end_time()));
}

RunSummary Simulation::summary() const
{
    RunSummary s;
    s.scenario = config_.name;
    s.seed = config_.seed;
    s.end = events_.now();
    s.loops_plc1 = loops1_;
    s.loops_plc2 = loops2_;
    s.frames = frames_;
    s.attacks = attacker_->records().size();
    s.bottles_filled = plant_->state().bottles_filled;
    s.bottles_departed = plant_->state().bottles_departed;
    s.spilled = plant_->state().spilled;
    s.events = history_.size();
    for (const auto& d : metrics_.delays) {
        auto& slot = d.plc == 1 ? s.max_delay_ms_plc1 : s.max_delay_ms_plc2;
        slot = std::max(slot, ms(d.delay));
    }
    return s;
}

RunSummary Simulation::finish()
{
    if (finished_) return summary();
    attacker_->finalize(events_.now());
    record_event("scenario", "run finished at " + observer::seconds6(events_.now()) + " s");
    finished_ = true;
    if (out_dir_) {
        observer::write_metrics(*out_dir_ / "metrics.csv", metrics_, observer::attack_windows(attacker_->records()));
        pcap_->close();
        state1_->close();
        state2_->close();
        attack_log_->close();
        event_log_->close();
        std::filesystem::remove(*out_dir_ / kIncomplete);
    }
    return summary();
}

RunSummary Simulation::run()
{
    run_until(end_time());
    return finish();
}

void Simulation::mark_incomplete(const std::string& reason) noexcept
{
    if (!out_dir_) return;
    try {
        std::ofstream f(*out_dir_ / kIncomplete, std::ios::trunc);
        f << reason << "\n";
    } catch (...) {
    }
}

void Simulation::command(const std::string& signal, double value, std::function<void(const modbus::ClientResult&)> done)
{
    const auto* d = signals_.find(signal);
    if (!d) {
        throw CommandError("unknown signal \"" + signal + "\"");
    }
    if (!std::isfinite(value)) {
        throw CommandError("value must be a finite number");
    }
    if (d->kind != control::SignalKind::Control) {
        throw CommandConflict("\"" + signal + "\" is not a control signal");
    }
    if (finished_) {
        throw CommandConflict("simulation has finished");
    }
    record_event(hmi2_->name(), "operator command " + signal + " = " + observer::fixed6(value));
    hmi2_->write(signal, value, std::move(done));
}

int Simulation::launch_attack(attack::AttackConfig cfg)
{
    if (cfg.start < events_.now()) cfg.start = events_.now();
    for (const auto& v : cfg.victims) {
        if (const auto* n = config_.find_node(v); n && n->role == Role::Attacker) {
            throw std::invalid_argument("attack.victims: the attacker cannot be a victim");
        }
    }
    return attacker_->launch(std::move(cfg));
}

json Simulation::signals_json() const
{
    json list = json::array();
    for (const auto& d : signals_.all()) {
        list.push_back({{"name", d.name},
                        {"kind", control::to_string(d.kind)},
                        {"range", control::to_string(d.range)},
                        {"plc", d.plc},
                        {"address", d.address},
                        {"registers", 2},
                        {"writable", d.writable()}});
    }
    return list;
}

json Simulation::snapshot() const
{
    const auto now = events_.now();
    json signals = json::object();
    for (const auto& d : signals_.all()) {
        signals[d.name] = plc(d.plc).value(d.name);
    }
    const auto& st = plant_->state();
    json delays = json::object();
    for (const auto& [plc_id, s] : last_delay_) {
        delays["plc" + std::to_string(plc_id)] = {{"loop", s.loop}, {"time_s", to_seconds(s.release)}, {"delay_ms", ms(s.delay)}};
    }
    json responses = json::object();
    for (const auto& [key, s] : last_response_) {
        responses[key] = {{"time_s", to_seconds(s.sent_at)},
                          {"rtt_ms", ms(s.rtt)},
                          {"error", s.error == modbus::ClientError::None ? "" : modbus::to_string(s.error)}};
    }
    json active = json::array();
    for (int id : attacker_->active()) {
        const auto& r = attacker_->record(id);
        active.push_back({{"id", id}, {"kind", attack::to_string(r.config.kind)}, {"start_s", to_seconds(r.start)}});
    }
    return json{{"virtual_time_us", now.count()},
                {"virtual_time_s", to_seconds(now)},
                {"running", !finished_ && now < end_time()},
                {"signals", signals},
                {"actuators",
                 {{"tank_input_valve_open", st.input_valve_open},
                  {"tank_output_valve_open", st.output_valve_open},
                  {"conveyor_belt_running", st.belt_running}}},
                {"plant",
                 {{"tank_level", st.tank_level},
                  {"bottle_level", st.bottle_level},
                  {"bottle_distance", st.bottle_distance},
                  {"bottles_filled", st.bottles_filled},
                  {"spilled", st.spilled}}},
                {"metrics", {{"logic_execution_delay", delays}, {"response_time", responses}}},
                {"active_attacks", active}};
}

json Simulation::metrics_json(SimTime since) const
{
    json delays = json::array();
    for (const auto& d : metrics_.delays) {
        if (d.release < since) continue;
        delays.push_back({{"plc", d.plc}, {"loop", d.loop}, {"time_s", to_seconds(d.release)}, {"delay_ms", ms(d.delay)}});
    }
    json responses = json::array();
    for (const auto& r : metrics_.responses) {
        if (r.sent_at < since) continue;
        responses.push_back({{"client", r.client},
                             {"server", r.server},
                             {"transaction_id", r.transaction_id},
                             {"time_s", to_seconds(r.sent_at)},
                             {"rtt_ms", ms(r.rtt)},
                             {"error", r.error == modbus::ClientError::None ? "" : modbus::to_string(r.error)}});
    }
    json windows = json::array();
    for (const auto& r : attacker_->records()) {
        windows.push_back({{"id", r.id},
                           {"kind", attack::to_string(r.config.kind)},
                           {"start_s", to_seconds(r.start)},
                           {"end_s", r.end ? json(to_seconds(*r.end)) : json(nullptr)}});
    }
    return json{{"since_s", to_seconds(since)},
                {"now_s", to_seconds(events_.now())},
                {"logic_execution_delay", delays},
                {"response_time", responses},
                {"attack_windows", windows}};
}

json Simulation::attacks_json() const
{
    json list = json::array();
    for (const auto& r : attacker_->records()) list.push_back(attack::to_json(r));
    return list;
}

} // namespace icsbed::scenario
