#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "icsbed/control/cpu_queue.hpp"
#include "icsbed/control/laws.hpp"
#include "icsbed/control/metrics.hpp"
#include "icsbed/control/signals.hpp"
#include "icsbed/modbus/client.hpp"
#include "icsbed/modbus/register_file.hpp"
#include "icsbed/modbus/server.hpp"
#include "icsbed/physics/shared_io.hpp"

namespace icsbed::control {

struct PlcConfig {
    Duration loop_period = 200ms;
    Duration logic_cost = 1ms;
    Duration request_cost = 200us;
    double request_jitter = 0.2; // uniform relative
    /// CPU time to accept one TCP connection.
    Duration accept_cost = 500us;
    std::uint16_t port = 502;
    Duration peer_timeout = 1s;
    /// Initial values of this PLC's control signals; missing ones use the
    /// plant defaults.
    std::map<std::string, double> initial;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    bool operator==(const PlcConfig&) const = default;
};

/// Default control values: modes Auto, tank 10..20 L, bottle full at 1.5 L.
double default_control_value(std::string_view signal);

using EventSink = std::function<void(std::string_view source, std::string_view message)>;

/// A virtual PLC: a Modbus server on its own CPU queue and a periodic control
/// loop bound to the shared I/O. PLC1 runs the tank, PLC2 the conveyor; each
/// reads the other's values through a Modbus client.
class Plc {
public:
    using RowSink = std::function<void(const StateRow&)>;
    using DelaySink = std::function<void(const DelaySample&)>;
    using ResponseSink = std::function<void(const ResponseSample&)>;

    Plc(int id, std::string name, tcp::TcpStack& stack, physics::SharedIO& io, const SignalMap& signals,
        PlcConfig config, Rng cost_rng);
    ~Plc();
    Plc(const Plc&) = delete;
    Plc& operator=(const Plc&) = delete;

    void set_peer(std::string name, tcp::Endpoint endpoint);
    /// Loop k is released at `at + k * loop_period`.
    void start(SimTime at = SimTime{0});

    void on_row(RowSink s) { row_sink_ = std::move(s); }
    void on_delay(DelaySink s) { delay_sink_ = std::move(s); }
    void on_response(ResponseSink s) { response_sink_ = std::move(s); }
    void on_event(EventSink s) { event_sink_ = std::move(s); }

    int id() const { return id_; }
    const std::string& name() const { return name_; }
    const PlcConfig& config() const { return config_; }

    /// Column names of the state log, in register order.
    const std::vector<SignalDef>& columns() const { return own_; }
    /// Current value of one of this PLC's signals as held in its registers.
    double value(std::string_view signal) const;

    modbus::RegisterFile& registers() { return registers_; }
    const modbus::RegisterFile& registers() const { return registers_; }
    CpuQueue& cpu() { return cpu_; }
    const modbus::ServerStats& server_stats() const { return server_->stats(); }
    std::uint64_t loops_completed() const { return loops_; }
    std::uint64_t requests_served() const { return served_; }

private:
    void release(std::uint64_t k);
    void run_logic(std::uint64_t k, SimTime release, SimTime start);
    void serve(modbus::IncomingRequest req);
    modbus::Adu answer(const modbus::IncomingRequest& req);
    void poll_peer();
    void store(std::string_view signal, double v);
    double reg_value(const SignalDef& d) const;
    void emit(std::string_view message);

    int id_;
    std::string name_;
    EventQueue& events_;
    tcp::TcpStack& stack_;
    physics::SharedIO& io_;
    const SignalMap& signals_;
    PlcConfig config_;
    Rng cost_rng_;
    CpuQueue cpu_;
    modbus::RegisterFile registers_;
    std::unique_ptr<modbus::ModbusServer> server_;
    std::vector<SignalDef> own_;

    std::string peer_name_;
    std::unique_ptr<modbus::ModbusClient> peer_;
    bool peer_in_flight_ = false;
    std::map<std::string, double, std::less<>> peer_values_;

    SimTime epoch_{0};
    std::uint64_t loops_ = 0;
    std::uint64_t served_ = 0;
    bool input_valve_open_ = false;
    RowSink row_sink_;
    DelaySink delay_sink_;
    ResponseSink response_sink_;
    EventSink event_sink_;
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

} // namespace icsbed::control
