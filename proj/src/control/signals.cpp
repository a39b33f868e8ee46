#include "icsbed/control/signals.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace icsbed::control {

const char* to_string(SignalKind k)
{
    switch (k) {
    case SignalKind::Input: return "input";
    case SignalKind::Output: return "output";
    case SignalKind::Control: return "control";
    }
    return "?";
}

const char* to_string(ValueRange r)
{
    switch (r) {
    case ValueRange::Real: return "real";
    case ValueRange::OnOff: return "on/off";
    case ValueRange::OnOffAuto: return "on/off/auto";
    }
    return "?";
}

Mode decode_mode(double v)
{
    if (v >= 1.5) return Mode::Auto;
    if (v >= 0.5) return Mode::On;
    return Mode::Off;
}

double mode_value(Mode m) { return static_cast<double>(static_cast<int>(m)); }

const char* to_string(Mode m)
{
    switch (m) {
    case Mode::Off: return "off";
    case Mode::On: return "on";
    case Mode::Auto: return "auto";
    }
    return "?";
}

std::vector<SignalDef> SignalMap::default_defs()
{
    using K = SignalKind;
    using R = ValueRange;
    return {
        {std::string(sig::kInputValveState), K::Output, R::OnOff, 1, 0},
        {std::string(sig::kInputValveMode), K::Control, R::OnOffAuto, 1, 2},
        {std::string(sig::kTankLevel), K::Input, R::Real, 1, 4},
        {std::string(sig::kTankLevelMax), K::Control, R::Real, 1, 6},
        {std::string(sig::kTankLevelMin), K::Control, R::Real, 1, 8},
        {std::string(sig::kOutputValveState), K::Output, R::OnOff, 1, 10},
        {std::string(sig::kOutputValveMode), K::Control, R::OnOffAuto, 1, 12},
        {std::string(sig::kOutputFlow), K::Input, R::Real, 1, 14},
        {std::string(sig::kBeltState), K::Output, R::OnOff, 2, 0},
        {std::string(sig::kBeltMode), K::Control, R::OnOffAuto, 2, 2},
        {std::string(sig::kBottleLevel), K::Input, R::Real, 2, 4},
        {std::string(sig::kBottleLevelMax), K::Control, R::Real, 2, 6},
        {std::string(sig::kBottleDistance), K::Input, R::Real, 2, 8},
    };
}

SignalMap::SignalMap(std::vector<SignalDef> defs) : defs_(std::move(defs))
{
    const auto reference = default_defs();
    if (defs_.size() != reference.size()) {
        throw std::invalid_argument("signal map must list exactly " + std::to_string(reference.size()) + " signals");
    }
    for (const auto& ref : reference) {
        const auto n = std::count_if(defs_.begin(), defs_.end(), [&](const SignalDef& d) { return d.name == ref.name; });
        if (n != 1) {
            throw std::invalid_argument("signal map: " + ref.name + (n == 0 ? " missing" : " listed twice"));
        }
        const auto& d = at(ref.name);
        if (d.kind != ref.kind || d.range != ref.range || d.plc != ref.plc) {
            throw std::invalid_argument("signal map: " + ref.name + " has the wrong kind, range or plc");
        }
    }
    for (int plc : {1, 2}) {
        std::set<std::uint16_t> addrs;
        std::size_t count = 0;
        for (const auto& d : defs_) {
            if (d.plc != plc) continue;
            ++count;
            if (d.address % 2 != 0) {
                throw std::invalid_argument("signal map: " + d.name + " address must be even");
            }
            addrs.insert(d.address);
        }
        if (addrs.size() != count || (!addrs.empty() && *addrs.rbegin() != 2 * (count - 1))) {
            throw std::invalid_argument("signal map: plc" + std::to_string(plc) +
                                        " addresses must be distinct pairs packed from 0");
        }
    }
}

const SignalDef* SignalMap::find(std::string_view name) const
{
    for (const auto& d : defs_) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

const SignalDef& SignalMap::at(std::string_view name) const
{
    if (const auto* d = find(name)) {
        return *d;
    }
    throw std::invalid_argument("unknown signal: " + std::string(name));
}

std::vector<SignalDef> SignalMap::of_plc(int plc) const
{
    std::vector<SignalDef> out;
    for (const auto& d : defs_) {
        if (d.plc == plc) out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.address < b.address; });
    return out;
}

std::uint16_t SignalMap::register_span(int plc) const
{
    std::uint16_t span = 0;
    for (const auto& d : defs_) {
        if (d.plc == plc) span = std::max<std::uint16_t>(span, static_cast<std::uint16_t>(d.address + 2));
    }
    return span;
}

} // namespace icsbed::control
