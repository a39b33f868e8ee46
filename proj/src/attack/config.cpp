#include "icsbed/attack/config.hpp"

#include <set>
#include <stdexcept>

#include "icsbed/net/addr.hpp"
#include "icsbed/util/strict_json.hpp"

namespace icsbed::attack {

using nlohmann::json;
using util::StrictObject;

const char* to_string(AttackKind k)
{
    switch (k) {
    case AttackKind::Recon: return "recon";
    case AttackKind::Ddos: return "ddos";
    case AttackKind::Mitm: return "mitm";
    case AttackKind::Replay: return "replay";
    case AttackKind::SensorDegradation: return "sensor_degradation";
    }
    return "?";
}

std::optional<AttackKind> parse_attack_kind(std::string_view s)
{
    if (s == "recon") return AttackKind::Recon;
    if (s == "ddos") return AttackKind::Ddos;
    if (s == "mitm") return AttackKind::Mitm;
    if (s == "replay") return AttackKind::Replay;
    if (s == "sensor_degradation" || s == "sensor") return AttackKind::SensorDegradation;
    return std::nullopt;
}

const char* to_string(RuleDirection d)
{
    switch (d) {
    case RuleDirection::Requests: return "requests";
    case RuleDirection::Responses: return "responses";
    case RuleDirection::Both: return "both";
    }
    return "?";
}

Duration AttackConfig::total_duration() const
{
    if (kind == AttackKind::Replay) {
        return sniff * (1 + replay_count);
    }
    return duration;
}

AttackConfig default_attack(AttackKind kind)
{
    AttackConfig c;
    c.kind = kind;
    switch (kind) {
    case AttackKind::Recon: c.duration = 5s; break;
    case AttackKind::Ddos: c.duration = 60s; break;
    case AttackKind::Mitm:
        c.duration = 15s;
        c.victims = {"hmi2", "plc1"};
        break;
    case AttackKind::Replay: c.victims = {"hmi2", "plc1"}; break;
    case AttackKind::SensorDegradation:
        c.signal = control::sig::kTankLevel;
        c.error_fraction = 0.5;
        break;
    }
    return c;
}

namespace {

json rule_json(const InjectionRule& r)
{
    json j{{"signal", r.signal}, {"direction", to_string(r.direction)}};
    switch (r.mode) {
    case RuleMode::Set: j["set"] = r.value; break;
    case RuleMode::Offset: j["offset"] = r.value; break;
    case RuleMode::Random: j["random"] = json::array({r.low, r.high}); break;
    }
    return j;
}

double set_value(const json& v, const std::string& path)
{
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "off" || s == "Off") return 0.0;
        if (s == "on" || s == "On") return 1.0;
        if (s == "auto" || s == "Auto") return 2.0;
        throw std::invalid_argument(path + ": expected a number or off/on/auto, got \"" + s + "\"");
    }
    return util::as_number(v, path);
}

InjectionRule rule_from_json(const json& j, const std::string& path)
{
    StrictObject o(j, path);
    InjectionRule r;
    r.signal = o.string("signal");
    const auto dir = o.string("direction", std::string("requests"));
    if (dir == "requests") {
        r.direction = RuleDirection::Requests;
    } else if (dir == "responses") {
        r.direction = RuleDirection::Responses;
    } else if (dir == "both") {
        r.direction = RuleDirection::Both;
    } else {
        o.fail("direction", "expected requests, responses or both, got \"" + dir + "\"");
    }
    int modes = 0;
    if (const auto* v = o.optional("set")) {
        ++modes;
        r.mode = RuleMode::Set;
        r.value = set_value(*v, o.path("set"));
    }
    if (const auto* v = o.optional("offset")) {
        ++modes;
        r.mode = RuleMode::Offset;
        r.value = util::as_number(*v, o.path("offset"));
    }
    if (const auto* v = o.optional("random")) {
        ++modes;
        r.mode = RuleMode::Random;
        if (!v->is_array() || v->size() != 2) {
            o.fail("random", "expected [low, high]");
        }
        r.low = util::as_number((*v)[0], o.path("random") + "[0]");
        r.high = util::as_number((*v)[1], o.path("random") + "[1]");
        if (r.low > r.high) {
            o.fail("random", "low must not exceed high");
        }
    }
    if (modes != 1) {
        throw std::invalid_argument(path + ": exactly one of set, offset, random is required");
    }
    o.finish();
    return r;
}

std::vector<std::string> string_list(const json& v, const std::string& path)
{
    if (!v.is_array()) {
        throw std::invalid_argument(path + ": expected an array of strings");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(util::as_string(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

} // namespace

json to_json(const AttackConfig& c)
{
    json j{{"kind", to_string(c.kind)}, {"start", util::seconds_json(c.start)}};
    switch (c.kind) {
    case AttackKind::Recon:
        j["duration"] = util::seconds_json(c.duration);
        j["subnet"] = c.subnet;
        j["ports"] = c.ports;
        break;
    case AttackKind::Ddos:
        j["duration"] = util::seconds_json(c.duration);
        j["target"] = c.target;
        j["agents"] = c.agents;
        j["address"] = c.read_address;
        j["quantity"] = c.read_quantity;
        j["timeout"] = util::seconds_json(c.request_timeout);
        break;
    case AttackKind::Mitm: {
        j["duration"] = util::seconds_json(c.duration);
        j["victims"] = c.victims;
        j["poison_interval"] = util::seconds_json(c.poison_interval);
        json rules = json::array();
        for (const auto& r : c.rules) rules.push_back(rule_json(r));
        j["rules"] = rules;
        break;
    }
    case AttackKind::Replay:
        j["victims"] = c.victims;
        j["poison_interval"] = util::seconds_json(c.poison_interval);
        j["sniff"] = util::seconds_json(c.sniff);
        j["count"] = c.replay_count;
        j["reinject_control"] = c.reinject_control;
        break;
    case AttackKind::SensorDegradation:
        j["duration"] = util::seconds_json(c.duration);
        j["signal"] = c.signal;
        j["error"] = c.error_fraction;
        break;
    }
    return j;
}

AttackConfig attack_from_json(const json& j, const std::string& path)
{
    StrictObject o(j, path);
    const auto kind_text = o.string("kind");
    const auto kind = parse_attack_kind(kind_text);
    if (!kind) {
        o.fail("kind", "unknown attack kind \"" + kind_text + "\" (recon, ddos, mitm, replay, sensor_degradation)");
    }
    AttackConfig c = default_attack(*kind);
    c.start = o.seconds("start", Duration{0});
    switch (c.kind) {
    case AttackKind::Recon:
        c.duration = o.seconds("duration", c.duration);
        c.subnet = o.string("subnet", c.subnet);
        if (const auto* v = o.optional("ports")) {
            if (!v->is_array()) o.fail("ports", "expected an array of port numbers");
            c.ports.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                c.ports.push_back(static_cast<std::uint16_t>(
                    util::as_integer((*v)[i], o.path("ports") + "[" + std::to_string(i) + "]", 1, 65535)));
            }
        }
        break;
    case AttackKind::Ddos:
        c.duration = o.seconds("duration", c.duration);
        c.target = o.string("target", c.target);
        c.agents = static_cast<int>(o.integer("agents", c.agents, 1, 100000));
        c.read_address = static_cast<std::uint16_t>(o.integer("address", c.read_address, 0, 65535));
        c.read_quantity = static_cast<std::uint16_t>(o.integer("quantity", c.read_quantity, 1, 125));
        c.request_timeout = o.seconds("timeout", c.request_timeout);
        break;
    case AttackKind::Mitm:
        c.duration = o.seconds("duration", c.duration);
        if (const auto* v = o.optional("victims")) c.victims = string_list(*v, o.path("victims"));
        c.poison_interval = o.seconds("poison_interval", c.poison_interval);
        if (const auto* v = o.optional("rules")) {
            if (!v->is_array()) o.fail("rules", "expected an array");
            for (std::size_t i = 0; i < v->size(); ++i) {
                c.rules.push_back(rule_from_json((*v)[i], o.path("rules") + "[" + std::to_string(i) + "]"));
            }
        }
        break;
    case AttackKind::Replay:
        if (const auto* v = o.optional("victims")) c.victims = string_list(*v, o.path("victims"));
        c.poison_interval = o.seconds("poison_interval", c.poison_interval);
        c.sniff = o.seconds("sniff", c.sniff);
        c.replay_count = static_cast<int>(o.integer("count", c.replay_count, 0, 1000));
        c.reinject_control = o.boolean("reinject_control", c.reinject_control);
        break;
    case AttackKind::SensorDegradation:
        c.duration = o.seconds("duration", c.duration);
        c.signal = o.string("signal", c.signal);
        c.error_fraction = o.number("error", c.error_fraction);
        break;
    }
    o.finish();
    return c;
}

void validate_attack(const AttackConfig& c, const control::SignalMap& signals,
                     const std::function<bool(const std::string&)>& host_known, const std::string& path)
{
    auto fail = [&](const std::string& key, const std::string& what) {
        throw std::invalid_argument(path + "." + key + ": " + what);
    };
    auto check_victims = [&] {
        if (c.victims.size() < 2) fail("victims", "at least two victims are required");
        if (std::set<std::string>(c.victims.begin(), c.victims.end()).size() != c.victims.size()) {
            fail("victims", "victims must be distinct");
        }
        for (const auto& v : c.victims) {
            if (!host_known(v)) fail("victims", "unknown host \"" + v + "\"");
        }
        if (c.poison_interval <= Duration{0}) fail("poison_interval", "must be positive");
    };
    switch (c.kind) {
    case AttackKind::Recon:
        if (c.duration <= Duration{0}) fail("duration", "must be positive");
        try {
            (void)net::Subnet::parse(c.subnet);
        } catch (const std::exception& e) {
            fail("subnet", e.what());
        }
        if (std::set<std::uint16_t>(c.ports.begin(), c.ports.end()).size() != c.ports.size()) {
            fail("ports", "duplicate port");
        }
        break;
    case AttackKind::Ddos:
        if (c.duration <= Duration{0}) fail("duration", "must be positive");
        if (!host_known(c.target)) fail("target", "unknown host \"" + c.target + "\"");
        if (c.agents < 1) fail("agents", "must be at least 1");
        if (c.request_timeout <= Duration{0}) fail("timeout", "must be positive");
        break;
    case AttackKind::Mitm:
        if (c.duration <= Duration{0}) fail("duration", "must be positive");
        check_victims();
        for (std::size_t i = 0; i < c.rules.size(); ++i) {
            if (!signals.find(c.rules[i].signal)) {
                fail("rules[" + std::to_string(i) + "].signal", "unknown signal \"" + c.rules[i].signal + "\"");
            }
        }
        break;
    case AttackKind::Replay:
        check_victims();
        if (c.sniff <= Duration{0}) fail("sniff", "must be positive");
        if (c.replay_count < 1) fail("count", "must be at least 1");
        break;
    case AttackKind::SensorDegradation: {
        const auto* d = signals.find(c.signal);
        if (!d) fail("signal", "unknown signal \"" + c.signal + "\"");
        if (d->kind != control::SignalKind::Input) fail("signal", "\"" + c.signal + "\" is not a sensor input");
        if (!(c.error_fraction >= 0.0 && c.error_fraction < 1.0)) fail("error", "must be in [0, 1)");
        break;
    }
    }
}

} // namespace icsbed::attack
