#include "icsbed/control/hmi.hpp"

#include <cmath>
#include <stdexcept>

#include "icsbed/modbus/wide_value.hpp"

namespace icsbed::control {

HmiBase::HmiBase(std::string name, tcp::TcpStack& stack, const SignalMap& signals, PlcDirectory plcs)
    : name_(std::move(name)), stack_(stack), signals_(signals), plcs_(std::move(plcs))
{
}

modbus::ModbusClient& HmiBase::client(int plc)
{
    auto it = clients_.find(plc);
    if (it != clients_.end()) {
        return *it->second;
    }
    const auto ep = plcs_.endpoints.find(plc);
    if (ep == plcs_.endpoints.end()) {
        throw std::invalid_argument(name_ + ": no endpoint for plc" + std::to_string(plc));
    }
    auto c = std::make_unique<modbus::ModbusClient>(stack_, ep->second);
    const std::string server = plcs_.names.count(plc) ? plcs_.names.at(plc) : "plc" + std::to_string(plc);
    std::weak_ptr<bool> alive = alive_;
    c->set_rtt_observer([this, alive, server](const modbus::RttSample& s) {
        if (!alive.expired() && response_sink_) {
            response_sink_(ResponseSample{name_, server, s.transaction_id, s.sent_at, s.rtt, s.error});
        }
    });
    auto& ref = *c;
    clients_.emplace(plc, std::move(c));
    return ref;
}

HmiPoller::HmiPoller(std::string name, tcp::TcpStack& stack, const SignalMap& signals, PlcDirectory plcs,
                     Duration period)
    : HmiBase(std::move(name), stack, signals, std::move(plcs)), period_(period)
{
    if (period_ <= Duration{0}) {
        throw std::invalid_argument("hmi poll period must be positive");
    }
}

void HmiPoller::start(SimTime at)
{
    epoch_ = at;
    std::weak_ptr<bool> alive = alive_;
    stack_.events().schedule(at, [this, alive] {
        if (!alive.expired()) poll(0);
    });
}

void HmiPoller::poll(std::uint64_t k)
{
    auto outstanding = std::make_shared<int>(0);
    auto ok = std::make_shared<bool>(true);
    std::weak_ptr<bool> alive = alive_;
    for (const auto& [plc, ep] : plcs_.endpoints) {
        const auto defs = signals_.of_plc(plc);
        const auto span = signals_.register_span(plc);
        if (defs.empty() || span == 0) continue;
        ++*outstanding;
        client(plc).read(0, span, [this, alive, defs, outstanding, ok](const modbus::ClientResult& r) {
            if (alive.expired()) return;
            if (r.ok()) {
                for (const auto& d : defs) {
                    if (d.address + 1u < r.values.size()) {
                        snapshot_[d.name] = modbus::regs_to_float(r.values, d.address);
                    }
                }
            } else {
                *ok = false;
            }
            if (--*outstanding == 0) {
                ++(*ok ? polls_ : failures_);
            }
        });
    }
    stack_.events().schedule(epoch_ + period_ * static_cast<std::int64_t>(k + 1), [this, alive, k] {
        if (!alive.expired()) poll(k + 1);
    });
}

void HmiWriter::write(std::string_view signal, double value, Done done)
{
    const auto& d = signals_.at(signal);
    if (!std::isfinite(value)) {
        throw std::invalid_argument("signal values must be finite");
    }
    const auto regs = modbus::float_to_regs(static_cast<float>(value));
    ++sent_;
    std::weak_ptr<bool> alive = alive_;
    client(d.plc).write(d.address, {regs[0], regs[1]}, [this, alive, done](const modbus::ClientResult& r) {
        if (alive.expired()) return;
        ++(r.ok() ? acked_ : failed_);
        if (done) done(r);
    });
}

void HmiWriter::read(std::string_view signal, std::function<void(const modbus::ClientResult&, double)> done)
{
    const auto& d = signals_.at(signal);
    client(d.plc).read(d.address, 2, [done](const modbus::ClientResult& r) {
        const double v = r.ok() && r.values.size() >= 2 ? modbus::regs_to_float(r.values, 0) : std::nan("");
        if (done) done(r, v);
    });
}

void HmiWriter::run_script(const std::vector<ScriptStep>& steps)
{
    for (const auto& s : steps) {
        (void)signals_.at(s.signal);
    }
    std::weak_ptr<bool> alive = alive_;
    for (const auto& s : steps) {
        stack_.events().schedule(s.at, [this, alive, s] {
            if (!alive.expired()) write(s.signal, s.value);
        });
    }
}

} // namespace icsbed::control
