#include "icsbed/control/plc.hpp"

#include <cmath>
#include <stdexcept>

#include "icsbed/modbus/wide_value.hpp"

namespace icsbed::control {

void PlcConfig::validate() const
{
    if (loop_period <= Duration{0}) throw std::invalid_argument("plc.loop_period must be positive");
    if (logic_cost < Duration{0} || logic_cost >= loop_period) {
        throw std::invalid_argument("plc.logic_cost must be in [0, loop_period)");
    }
    if (request_cost < Duration{0}) throw std::invalid_argument("plc.request_cost must be >= 0");
    if (!(request_jitter >= 0.0 && request_jitter < 1.0)) {
        throw std::invalid_argument("plc.request_jitter must be in [0, 1)");
    }
    if (accept_cost < Duration{0}) throw std::invalid_argument("plc.accept_cost must be >= 0");
    if (port == 0) throw std::invalid_argument("plc.port must be nonzero");
    if (peer_timeout <= Duration{0}) throw std::invalid_argument("plc.peer_timeout must be positive");
}

double default_control_value(std::string_view signal)
{
    if (signal == sig::kTankLevelMin) return 10.0;
    if (signal == sig::kTankLevelMax) return 20.0;
    if (signal == sig::kBottleLevelMax) return 1.5;
    if (signal == sig::kInputValveMode || signal == sig::kOutputValveMode || signal == sig::kBeltMode) {
        return mode_value(Mode::Auto);
    }
    throw std::invalid_argument("not a control signal: " + std::string(signal));
}

Plc::Plc(int id, std::string name, tcp::TcpStack& stack, physics::SharedIO& io, const SignalMap& signals,
         PlcConfig config, Rng cost_rng)
    : id_(id), name_(std::move(name)), events_(stack.events()), stack_(stack), io_(io), signals_(signals),
      config_(std::move(config)), cost_rng_(cost_rng), cpu_(events_), own_(signals.of_plc(id))
{
    if (id != 1 && id != 2) {
        throw std::invalid_argument("plc id must be 1 or 2");
    }
    config_.validate();
    for (const auto& [sig_name, v] : config_.initial) {
        const auto& d = signals_.at(sig_name);
        if (d.plc != id || d.kind != SignalKind::Control) {
            throw std::invalid_argument(name_ + ": initial value for " + sig_name + " which is not one of its controls");
        }
        if (!std::isfinite(v)) {
            throw std::invalid_argument(name_ + ": initial value for " + sig_name + " is not finite");
        }
    }
    for (const auto& d : own_) {
        registers_.map_range(d.address, 2, d.writable());
    }
    for (const auto& d : own_) {
        if (d.kind == SignalKind::Control) {
            auto it = config_.initial.find(d.name);
            store(d.name, it != config_.initial.end() ? it->second : default_control_value(d.name));
        } else if (d.kind == SignalKind::Input && io_.contains(d.name)) {
            store(d.name, io_.read(d.name));
        }
    }

    std::weak_ptr<bool> alive = alive_;
    server_ = std::make_unique<modbus::ModbusServer>(
        stack_, config_.port,
        [this, alive](modbus::IncomingRequest req) {
            if (!alive.expired()) serve(std::move(req));
        },
        [this, alive](const tcp::ConnectionPtr&) {
            if (!alive.expired()) cpu_.enqueue(config_.accept_cost, {});
        });
}

Plc::~Plc() { *alive_ = false; }

void Plc::set_peer(std::string name, tcp::Endpoint endpoint)
{
    peer_name_ = std::move(name);
    modbus::ClientOptions opts;
    opts.timeout = config_.peer_timeout;
    peer_ = std::make_unique<modbus::ModbusClient>(stack_, endpoint, opts);
    peer_->set_rtt_observer([this](const modbus::RttSample& s) {
        if (response_sink_) {
            response_sink_(ResponseSample{name_, peer_name_, s.transaction_id, s.sent_at, s.rtt, s.error});
        }
    });
}

void Plc::start(SimTime at)
{
    epoch_ = at;
    std::weak_ptr<bool> alive = alive_;
    events_.schedule(at, [this, alive] {
        if (!alive.expired()) release(0);
    });
}

void Plc::release(std::uint64_t k)
{
    const SimTime rel = events_.now();
    std::weak_ptr<bool> alive = alive_;
    cpu_.enqueue(config_.logic_cost, [this, alive, k, rel](SimTime start, SimTime) {
        if (!alive.expired()) run_logic(k, rel, start);
    });
    events_.schedule(epoch_ + config_.loop_period * static_cast<std::int64_t>(k + 1), [this, alive, k] {
        if (!alive.expired()) release(k + 1);
    });
}

double Plc::reg_value(const SignalDef& d) const
{
    return modbus::regs_to_float(modbus::RegisterPair{registers_.load(d.address), registers_.load(d.address + 1)});
}

double Plc::value(std::string_view signal) const
{
    const auto& d = signals_.at(signal);
    if (d.plc != id_) {
        throw std::invalid_argument(std::string(signal) + " does not belong to " + name_);
    }
    return reg_value(d);
}

void Plc::store(std::string_view signal, double v)
{
    const auto& d = signals_.at(signal);
    const auto regs = modbus::float_to_regs(static_cast<float>(v));
    registers_.store(d.address, regs);
}

void Plc::emit(std::string_view message)
{
    if (event_sink_) {
        event_sink_(name_, message);
    }
}

void Plc::run_logic(std::uint64_t k, SimTime release, SimTime start)
{
    const Duration delay = start - release;
    if (delay_sink_) {
        delay_sink_(DelaySample{id_, k, release, start, delay});
    }

    for (const auto& d : own_) {
        if (d.kind == SignalKind::Input) {
            store(d.name, io_.read(d.name));
        }
    }
    auto peer = [&](std::string_view n) -> std::optional<double> {
        auto it = peer_values_.find(n);
        return it == peer_values_.end() ? std::nullopt : std::optional<double>(it->second);
    };

    if (id_ == 1) {
        Plc1Inputs in;
        in.tank_level = value(sig::kTankLevel);
        in.tank_level_min = value(sig::kTankLevelMin);
        in.tank_level_max = value(sig::kTankLevelMax);
        in.input_mode = decode_mode(value(sig::kInputValveMode));
        in.output_mode = decode_mode(value(sig::kOutputValveMode));
        in.input_valve_was_open = input_valve_open_;
        in.bottle_level = peer(sig::kBottleLevel);
        in.bottle_level_max = peer(sig::kBottleLevelMax);
        in.bottle_distance = peer(sig::kBottleDistance);
        const auto out = control_law_plc1(in);
        input_valve_open_ = out.input_valve_open;
        io_.write(physics::Side::Plc, sig::kInputValveState, out.input_valve_open ? 1.0 : 0.0);
        io_.write(physics::Side::Plc, sig::kOutputValveState, out.output_valve_open ? 1.0 : 0.0);
        store(sig::kInputValveState, out.input_valve_open ? 1.0 : 0.0);
        store(sig::kOutputValveState, out.output_valve_open ? 1.0 : 0.0);
    } else {
        Plc2Inputs in;
        in.bottle_level = value(sig::kBottleLevel);
        in.bottle_level_max = value(sig::kBottleLevelMax);
        in.bottle_distance = value(sig::kBottleDistance);
        in.belt_mode = decode_mode(value(sig::kBeltMode));
        in.output_flow = peer(sig::kOutputFlow);
        const bool run = control_law_plc2(in);
        io_.write(physics::Side::Plc, sig::kBeltState, run ? 1.0 : 0.0);
        store(sig::kBeltState, run ? 1.0 : 0.0);
    }

    ++loops_;
    if (row_sink_) {
        StateRow row;
        row.plc = id_;
        row.loop = k;
        row.time = start;
        row.delay = delay;
        row.values.reserve(own_.size());
        for (const auto& d : own_) {
            row.values.push_back(reg_value(d));
        }
        row_sink_(row);
    }
    poll_peer();
}

void Plc::poll_peer()
{
    if (!peer_ || peer_in_flight_) {
        return;
    }
    std::vector<SignalDef> wanted;
    if (id_ == 1) {
        for (auto n : {sig::kBottleLevel, sig::kBottleLevelMax, sig::kBottleDistance}) wanted.push_back(signals_.at(n));
    } else {
        wanted.push_back(signals_.at(sig::kOutputFlow));
    }
    std::uint16_t lo = 0xFFFF, hi = 0;
    for (const auto& d : wanted) {
        lo = std::min(lo, d.address);
        hi = std::max<std::uint16_t>(hi, static_cast<std::uint16_t>(d.address + 2));
    }
    peer_in_flight_ = true;
    std::weak_ptr<bool> alive = alive_;
    peer_->read(lo, static_cast<std::uint16_t>(hi - lo), [this, alive, wanted, lo](const modbus::ClientResult& r) {
        if (alive.expired()) return;
        peer_in_flight_ = false;
        if (!r.ok()) {
            emit(std::string("warning: peer read from ") + peer_name_ + " failed (" + modbus::to_string(r.error) +
                 "), holding last values");
            return;
        }
        for (const auto& d : wanted) {
            const std::size_t off = d.address - lo;
            if (off + 1 < r.values.size()) {
                peer_values_[d.name] = modbus::regs_to_float(r.values, off);
            }
        }
    });
}

void Plc::serve(modbus::IncomingRequest req)
{
    const double jitter = config_.request_jitter * (2.0 * cost_rng_.uniform01() - 1.0);
    const auto cost = Duration{static_cast<std::int64_t>(
        std::llround(static_cast<double>(config_.request_cost.count()) * (1.0 + jitter)))};
    std::weak_ptr<bool> alive = alive_;
    cpu_.enqueue(cost, [this, alive, req = std::move(req)](SimTime, SimTime) {
        if (alive.expired()) return;
        ++served_;
        server_->respond(req.conn, answer(req));
    });
}

modbus::Adu Plc::answer(const modbus::IncomingRequest& req)
{
    if (const auto* ex = std::get_if<modbus::ExceptionResponse>(&req.body)) {
        return modbus::Adu{req.transaction_id, req.unit_id, *ex};
    }
    const auto& adu = std::get<modbus::Adu>(req.body);
    if (const auto* w = std::get_if<modbus::WriteMultipleRequest>(&adu.pdu)) {
        // Physical quantities only: refuse NaN or infinity in any whole signal.
        for (const auto& d : own_) {
            if (d.address >= w->start && d.address + 2u <= w->start + w->values.size()) {
                const auto off = d.address - w->start;
                if (!std::isfinite(modbus::regs_to_float(w->values, off))) {
                    return modbus::Adu{adu.transaction_id, adu.unit_id,
                                       modbus::ExceptionResponse{modbus::kWriteMultipleRegisters,
                                                                 modbus::ExceptionCode::IllegalDataValue}};
                }
            }
        }
    }
    return modbus::server_handle(registers_, adu);
}

} // namespace icsbed::control
