#include "icsbed/scenario/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "icsbed/util/strict_json.hpp"

namespace icsbed::scenario {

using nlohmann::json;
using util::seconds_json;
using util::StrictObject;

const char* to_string(Role r)
{
    switch (r) {
    case Role::Plc1: return "plc1";
    case Role::Plc2: return "plc2";
    case Role::Hmi1: return "hmi1";
    case Role::Hmi2: return "hmi2";
    case Role::Attacker: return "attacker";
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view s)
{
    for (auto r : {Role::Plc1, Role::Plc2, Role::Hmi1, Role::Hmi2, Role::Attacker}) {
        if (s == to_string(r)) return r;
    }
    return std::nullopt;
}

const NodeSpec& ScenarioConfig::node(Role r) const
{
    for (const auto& n : nodes) {
        if (n.role == r) return n;
    }
    throw std::invalid_argument(std::string("scenario has no ") + to_string(r) + " node");
}

const NodeSpec* ScenarioConfig::find_node(std::string_view name) const
{
    for (const auto& n : nodes) {
        if (n.name == name) return &n;
    }
    return nullptr;
}

std::vector<NodeSpec> default_nodes()
{
    std::vector<NodeSpec> out;
    const std::pair<Role, int> plan[] = {
        {Role::Plc1, 11}, {Role::Plc2, 12}, {Role::Hmi1, 21}, {Role::Hmi2, 22}, {Role::Attacker, 41}};
    for (const auto& [role, octet] : plan) {
        const auto ip = net::Ipv4Addr::from_octets(192, 168, 0, static_cast<std::uint8_t>(octet));
        out.push_back(NodeSpec{to_string(role), role, ip, net::plan_mac_for(ip)});
    }
    return out;
}

ScenarioConfig default_scenario()
{
    ScenarioConfig c;
    c.nodes = default_nodes();
    return c;
}

ScenarioConfig bottle_plant_scenario()
{
    auto c = default_scenario();
    auto ddos = attack::default_attack(attack::AttackKind::Ddos);
    ddos.start = 60s;
    ddos.duration = 60s;
    ddos.target = "plc1";
    ddos.agents = 800;
    c.attacks.push_back(ddos);
    return c;
}

control::SignalMap build_signal_map(const ScenarioConfig& c)
{
    auto defs = control::SignalMap::default_defs();
    for (const auto& [name, addr] : c.signal_addresses) {
        bool found = false;
        for (auto& d : defs) {
            if (d.name == name) {
                d.address = addr;
                found = true;
            }
        }
        if (!found) {
            throw std::invalid_argument("signals." + name + ": unknown signal");
        }
    }
    try {
        return control::SignalMap{defs};
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("signals: ") + e.what());
    }
}

namespace {

json plc_json(const control::PlcConfig& p)
{
    return json{{"loop_period", seconds_json(p.loop_period)},
                {"logic_cost", seconds_json(p.logic_cost)},
                {"request_cost", seconds_json(p.request_cost)},
                {"request_jitter", p.request_jitter},
                {"accept_cost", seconds_json(p.accept_cost)},
                {"peer_timeout", seconds_json(p.peer_timeout)},
                {"initial", p.initial}};
}

control::PlcConfig plc_from(const json& j, const std::string& path)
{
    StrictObject o(j, path);
    control::PlcConfig p;
    p.loop_period = o.seconds("loop_period", p.loop_period);
    p.logic_cost = o.seconds("logic_cost", p.logic_cost);
    p.request_cost = o.seconds("request_cost", p.request_cost);
    p.request_jitter = o.number("request_jitter", p.request_jitter);
    p.accept_cost = o.seconds("accept_cost", p.accept_cost);
    p.peer_timeout = o.seconds("peer_timeout", p.peer_timeout);
    if (const auto* v = o.optional("initial")) {
        StrictObject init(*v, o.path("initial"));
        for (const auto& [k, val] : v->items()) {
            p.initial[k] = init.number(k);
        }
        init.finish();
    }
    o.finish();
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return p;
}

json plant_json(const physics::PlantParams& p, const physics::PlantInitial& i)
{
    return json{{"tank_levels", p.tank_levels},
                {"tank_level_capacity", p.tank_level_capacity},
                {"tank_inlet_flow", p.tank_inlet_flow},
                {"tank_outlet_flow", p.tank_outlet_flow},
                {"bottle_levels", p.bottle_levels},
                {"bottle_level_capacity", p.bottle_level_capacity},
                {"bottle_spacing", p.bottle_spacing},
                {"belt_speed", p.belt_speed},
                {"tank_level_error", p.tank_level_error},
                {"bottle_level_error", p.bottle_level_error},
                {"bottle_distance_error", p.bottle_distance_error},
                {"tick", seconds_json(p.tick)},
                {"filler_epsilon", p.filler_epsilon},
                {"full_fraction", p.full_fraction},
                {"initial",
                 {{"tank_level", i.tank_level}, {"bottle_level", i.bottle_level}, {"bottle_distance", i.bottle_distance}}}};
}

void plant_from(const json& j, const std::string& path, physics::PlantParams& p, physics::PlantInitial& i)
{
    StrictObject o(j, path);
    p.tank_levels = static_cast<int>(o.integer("tank_levels", p.tank_levels, 1, 1000));
    p.tank_level_capacity = o.number("tank_level_capacity", p.tank_level_capacity);
    p.tank_inlet_flow = o.number("tank_inlet_flow", p.tank_inlet_flow);
    p.tank_outlet_flow = o.number("tank_outlet_flow", p.tank_outlet_flow);
    p.bottle_levels = static_cast<int>(o.integer("bottle_levels", p.bottle_levels, 1, 1000));
    p.bottle_level_capacity = o.number("bottle_level_capacity", p.bottle_level_capacity);
    p.bottle_spacing = o.number("bottle_spacing", p.bottle_spacing);
    p.belt_speed = o.number("belt_speed", p.belt_speed);
    p.tank_level_error = o.number("tank_level_error", p.tank_level_error);
    p.bottle_level_error = o.number("bottle_level_error", p.bottle_level_error);
    p.bottle_distance_error = o.number("bottle_distance_error", p.bottle_distance_error);
    p.tick = o.seconds("tick", p.tick);
    p.filler_epsilon = o.number("filler_epsilon", p.filler_epsilon);
    p.full_fraction = o.number("full_fraction", p.full_fraction);
    if (const auto* v = o.optional("initial")) {
        StrictObject in(*v, o.path("initial"));
        i.tank_level = in.number("tank_level", i.tank_level);
        i.bottle_level = in.number("bottle_level", i.bottle_level);
        i.bottle_distance = in.number("bottle_distance", i.bottle_distance);
        in.finish();
    }
    o.finish();
}

} // namespace

json render(const ScenarioConfig& c)
{
    json nodes = json::array();
    for (const auto& n : c.nodes) {
        nodes.push_back({{"name", n.name}, {"role", to_string(n.role)}, {"ip", n.ip.to_string()}, {"mac", n.mac.to_string()}});
    }
    json script = json::array();
    for (const auto& s : c.hmi2_script) {
        script.push_back({{"at", seconds_json(s.at)}, {"signal", s.signal}, {"value", s.value}});
    }
    json attacks = json::array();
    for (const auto& a : c.attacks) attacks.push_back(attack::to_json(a));
    json signals = json::object();
    for (const auto& [k, v] : c.signal_addresses) signals[k] = v;

    return json{{"name", c.name},
                {"seed", c.seed},
                {"duration", seconds_json(c.duration)},
                {"pacing", c.pacing == Pacing::Virtual ? "virtual" : "wall_clock"},
                {"network",
                 {{"subnet", c.subnet},
                  {"hop_latency", seconds_json(c.network.hop_latency)},
                  {"loss_probability", c.network.loss_probability},
                  {"max_jitter", seconds_json(c.network.max_jitter)}}},
                {"nodes", nodes},
                {"plant", plant_json(c.plant, c.initial)},
                {"plcs", {{"plc1", plc_json(c.plc1)}, {"plc2", plc_json(c.plc2)}}},
                {"signals", signals},
                {"hmi1", {{"poll_period", seconds_json(c.hmi1_poll_period)}}},
                {"hmi2", {{"script", script}}},
                {"attacks", attacks},
                {"gateway", {{"stream_hz", c.stream_hz}}}};
}

std::string render_text(const ScenarioConfig& c)
{
    return render(c).dump(2) + "\n";
}

ScenarioConfig parse_config(const json& j)
{
    StrictObject o(j, "");
    ScenarioConfig c = default_scenario();
    c.name = o.string("name", c.name);
    if (const auto* v = o.optional("seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            o.fail("seed", "expected a non-negative integer, got " + v->dump());
        }
        c.seed = v->get<std::uint64_t>();
    }
    c.duration = o.seconds("duration", c.duration);
    const auto pacing = o.string("pacing", std::string("virtual"));
    if (pacing == "virtual") {
        c.pacing = Pacing::Virtual;
    } else if (pacing == "wall_clock") {
        c.pacing = Pacing::WallClock;
    } else {
        o.fail("pacing", "expected virtual or wall_clock, got \"" + pacing + "\"");
    }

    if (const auto* v = o.optional("network")) {
        StrictObject n(*v, "network");
        c.subnet = n.string("subnet", c.subnet);
        c.network.hop_latency = n.seconds("hop_latency", c.network.hop_latency);
        c.network.loss_probability = n.number("loss_probability", c.network.loss_probability);
        c.network.max_jitter = n.seconds("max_jitter", c.network.max_jitter);
        n.finish();
    }

    if (const auto* v = o.optional("nodes")) {
        if (!v->is_array()) o.fail("nodes", "expected an array");
        c.nodes.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string path = "nodes[" + std::to_string(i) + "]";
            StrictObject n((*v)[i], path);
            NodeSpec ns;
            ns.name = n.string("name");
            const auto role = n.string("role");
            const auto r = parse_role(role);
            if (!r) n.fail("role", "expected plc1, plc2, hmi1, hmi2 or attacker, got \"" + role + "\"");
            ns.role = *r;
            const auto ip = n.string("ip");
            try {
                ns.ip = net::Ipv4Addr::parse(ip);
            } catch (const std::exception& e) {
                n.fail("ip", e.what());
            }
            if (const auto* m = n.optional("mac")) {
                try {
                    ns.mac = net::MacAddr::parse(util::as_string(*m, n.path("mac")));
                } catch (const std::invalid_argument& e) {
                    n.fail("mac", e.what());
                }
            } else {
                ns.mac = net::plan_mac_for(ns.ip);
            }
            n.finish();
            c.nodes.push_back(ns);
        }
    }

    if (const auto* v = o.optional("plant")) plant_from(*v, "plant", c.plant, c.initial);

    if (const auto* v = o.optional("plcs")) {
        StrictObject p(*v, "plcs");
        if (const auto* x = p.optional("plc1")) c.plc1 = plc_from(*x, "plcs.plc1");
        if (const auto* x = p.optional("plc2")) c.plc2 = plc_from(*x, "plcs.plc2");
        p.finish();
    }

    if (const auto* v = o.optional("signals")) {
        StrictObject s(*v, "signals");
        for (const auto& [k, val] : v->items()) {
            c.signal_addresses[k] = static_cast<std::uint16_t>(s.integer(k, std::nullopt, 0, 65534));
        }
        s.finish();
    }

    if (const auto* v = o.optional("hmi1")) {
        StrictObject h(*v, "hmi1");
        c.hmi1_poll_period = h.seconds("poll_period", c.hmi1_poll_period);
        h.finish();
    }

    if (const auto* v = o.optional("hmi2")) {
        StrictObject h(*v, "hmi2");
        if (const auto* s = h.optional("script")) {
            if (!s->is_array()) h.fail("script", "expected an array");
            for (std::size_t i = 0; i < s->size(); ++i) {
                StrictObject step((*s)[i], "hmi2.script[" + std::to_string(i) + "]");
                control::ScriptStep st;
                st.at = step.seconds("at");
                st.signal = step.string("signal");
                st.value = step.number("value");
                step.finish();
                c.hmi2_script.push_back(st);
            }
        }
        h.finish();
    }

    if (const auto* v = o.optional("attacks")) {
        if (!v->is_array()) o.fail("attacks", "expected an array");
        for (std::size_t i = 0; i < v->size(); ++i) {
            c.attacks.push_back(attack::attack_from_json((*v)[i], "attacks[" + std::to_string(i) + "]"));
        }
    }

    if (const auto* v = o.optional("gateway")) {
        StrictObject g(*v, "gateway");
        c.stream_hz = g.number("stream_hz", c.stream_hz);
        g.finish();
    }
    o.finish();
    validate(c);
    return c;
}

ScenarioConfig parse_config_text(std::string_view text)
{
    json j;
    try {
        j = json::parse(text.begin(), text.end(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot read config " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void validate(const ScenarioConfig& c)
{
    auto fail = [](const std::string& key, const std::string& what) {
        throw std::invalid_argument(key + ": " + what);
    };
    if (c.name.empty()) fail("name", "must not be empty");
    if (c.duration <= Duration{0}) fail("duration", "must be positive");
    if (c.duration > 1000000s) fail("duration", "must not exceed 1e6 s");

    net::Subnet subnet;
    try {
        subnet = net::Subnet::parse(c.subnet);
    } catch (const std::exception& e) {
        fail("network.subnet", e.what());
    }
    if (c.network.hop_latency <= Duration{0}) fail("network.hop_latency", "must be positive");
    if (!(c.network.loss_probability >= 0.0 && c.network.loss_probability < 1.0)) {
        fail("network.loss_probability", "must be in [0, 1)");
    }

    std::set<std::string> names;
    std::set<net::Ipv4Addr> ips;
    std::set<net::MacAddr> macs;
    std::set<Role> roles;
    const auto hosts = subnet.hosts();
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        const auto& n = c.nodes[i];
        const std::string path = "nodes[" + std::to_string(i) + "]";
        if (n.name.empty()) fail(path + ".name", "must not be empty");
        if (!names.insert(n.name).second) fail(path + ".name", "duplicate node name \"" + n.name + "\"");
        if (!roles.insert(n.role).second) fail(path + ".role", std::string("duplicate role ") + to_string(n.role));
        if (!subnet.contains(n.ip) || n.ip == subnet.network || std::find(hosts.begin(), hosts.end(), n.ip) == hosts.end()) {
            fail(path + ".ip", n.ip.to_string() + " is not a host address in " + c.subnet);
        }
        if (!ips.insert(n.ip).second) fail(path + ".ip", "duplicate address " + n.ip.to_string());
        if (n.mac.is_broadcast() || n.mac == net::MacAddr::zero()) fail(path + ".mac", "must be a unicast address");
        if (!macs.insert(n.mac).second) fail(path + ".mac", "duplicate MAC " + n.mac.to_string());
    }
    for (auto r : {Role::Plc1, Role::Plc2, Role::Hmi1, Role::Hmi2, Role::Attacker}) {
        if (!roles.contains(r)) fail("nodes", std::string("missing a node with role ") + to_string(r));
    }

    try {
        c.plant.validate();
    } catch (const std::invalid_argument& e) {
        fail("plant", e.what());
    }
    if (c.initial.tank_level < 0 || c.initial.tank_level > c.plant.tank_capacity()) {
        fail("plant.initial.tank_level", "must be within the tank capacity");
    }
    if (c.initial.bottle_level < 0 || c.initial.bottle_level > c.plant.bottle_capacity()) {
        fail("plant.initial.bottle_level", "must be within the bottle capacity");
    }
    if (c.initial.bottle_distance < 0 || c.initial.bottle_distance > c.plant.bottle_spacing) {
        fail("plant.initial.bottle_distance", "must be within [0, bottle_spacing]");
    }
    c.plc1.validate();
    c.plc2.validate();
    const auto signals = build_signal_map(c);
    for (const auto* p : {&c.plc1, &c.plc2}) {
        for (const auto& [k, v] : p->initial) {
            const auto* d = signals.find(k);
            const std::string key = std::string("plcs.") + (p == &c.plc1 ? "plc1" : "plc2") + ".initial." + k;
            if (!d || d->kind != control::SignalKind::Control) fail(key, "not a control signal");
            if (d->plc != (p == &c.plc1 ? 1 : 2)) fail(key, "signal belongs to the other PLC");
            if (!std::isfinite(v)) fail(key, "must be finite");
        }
    }
    if (c.hmi1_poll_period <= Duration{0}) fail("hmi1.poll_period", "must be positive");
    for (std::size_t i = 0; i < c.hmi2_script.size(); ++i) {
        const auto& s = c.hmi2_script[i];
        const std::string path = "hmi2.script[" + std::to_string(i) + "]";
        if (!signals.find(s.signal)) fail(path + ".signal", "unknown signal \"" + s.signal + "\"");
        if (s.at > c.duration) fail(path + ".at", "after the end of the run");
    }

    auto host_known = [&](const std::string& h) {
        if (c.find_node(h)) return true;
        try {
            return ips.contains(net::Ipv4Addr::parse(h));
        } catch (const std::exception&) {
            return false;
        }
    };
    for (std::size_t i = 0; i < c.attacks.size(); ++i) {
        const auto& a = c.attacks[i];
        const std::string path = "attacks[" + std::to_string(i) + "]";
        attack::validate_attack(a, signals, host_known, path);
        if (a.start >= c.duration) fail(path + ".start", "attack starts at or after the end of the run");
        if (a.end() > c.duration) fail(path, "attack window ends after the run");
        for (const auto& v : a.victims) {
            const auto* n = c.find_node(v);
            if (n && n->role == Role::Attacker) fail(path + ".victims", "the attacker cannot be a victim");
        }
        if (a.kind == attack::AttackKind::Ddos) {
            const auto* n = c.find_node(a.target);
            if (n && n->role != Role::Plc1 && n->role != Role::Plc2) fail(path + ".target", "target serves no Modbus");
        }
    }
    if (!(c.stream_hz > 0.0 && c.stream_hz <= 100.0)) fail("gateway.stream_hz", "must be in (0, 100]");
}

} // namespace icsbed::scenario
