#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "icsbed/control/metrics.hpp"
#include "icsbed/control/signals.hpp"
#include "icsbed/modbus/client.hpp"

namespace icsbed::control {

/// Modbus endpoints of the two PLCs, by PLC id.
struct PlcDirectory {
    std::map<int, std::string> names;
    std::map<int, tcp::Endpoint> endpoints;
};

/// Shared plumbing: one Modbus client per PLC, RTT samples forwarded.
class HmiBase {
public:
    using ResponseSink = std::function<void(const ResponseSample&)>;

    HmiBase(std::string name, tcp::TcpStack& stack, const SignalMap& signals, PlcDirectory plcs);
    virtual ~HmiBase() = default;

    const std::string& name() const { return name_; }
    void on_response(ResponseSink s) { response_sink_ = std::move(s); }

protected:
    modbus::ModbusClient& client(int plc);

    std::string name_;
    tcp::TcpStack& stack_;
    const SignalMap& signals_;
    PlcDirectory plcs_;
    std::map<int, std::unique_ptr<modbus::ModbusClient>> clients_;
    ResponseSink response_sink_;
    std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

/// HMI-1: reads every signal of both PLCs each period.
class HmiPoller : public HmiBase {
public:
    HmiPoller(std::string name, tcp::TcpStack& stack, const SignalMap& signals, PlcDirectory plcs,
              Duration period = 500ms);

    void start(SimTime at);

    /// Latest value of each signal seen; all 13 once both PLCs answered.
    const std::map<std::string, double>& snapshot() const { return snapshot_; }
    std::uint64_t polls_completed() const { return polls_; }
    std::uint64_t poll_failures() const { return failures_; }

private:
    void poll(std::uint64_t k);

    Duration period_;
    SimTime epoch_{0};
    std::map<std::string, double> snapshot_;
    std::uint64_t polls_ = 0;
    std::uint64_t failures_ = 0;
};

struct ScriptStep {
    SimTime at{0};
    std::string signal;
    double value = 0.0;

    bool operator==(const ScriptStep&) const = default;
};

/// A writing HMI: interactive commands (HMI-2) and/or a timed script.
class HmiWriter : public HmiBase {
public:
    using Done = std::function<void(const modbus::ClientResult&)>;

    using HmiBase::HmiBase;

    /// Issues one WriteMultipleRegisters to the owning PLC. The PLC decides
    /// whether the signal is writable. Throws std::invalid_argument for
    /// unknown signals or non-finite values.
    void write(std::string_view signal, double value, Done done = {});
    /// Reads one signal back from its PLC.
    void read(std::string_view signal, std::function<void(const modbus::ClientResult&, double)> done);

    void run_script(const std::vector<ScriptStep>& steps);

    std::uint64_t writes_sent() const { return sent_; }
    std::uint64_t writes_acked() const { return acked_; }
    std::uint64_t writes_failed() const { return failed_; }

private:
    std::uint64_t sent_ = 0;
    std::uint64_t acked_ = 0;
    std::uint64_t failed_ = 0;
};

} // namespace icsbed::control
