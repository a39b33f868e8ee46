#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icsbed/attack/attacker.hpp"
#include "icsbed/control/metrics.hpp"
#include "icsbed/control/signals.hpp"

namespace icsbed::observer {

/// Fixed 6-decimal rendering used by every CSV ("-0.000000" becomes "0.000000").
std::string fixed6(double v);
/// Virtual time in seconds, 6 decimals.
std::string seconds6(SimTime t);

/// Line-oriented text sink that throws std::runtime_error on I/O failure.
class TextSink {
public:
    explicit TextSink(const std::filesystem::path& path);
    void line(std::string_view text);
    void flush();
    void close();
    const std::filesystem::path& path() const { return path_; }
    std::uint64_t lines() const { return lines_; }

private:
    void check(const char* what);

    std::filesystem::path path_;
    std::ofstream out_;
    std::uint64_t lines_ = 0;
};

/// state_plc<N>.csv: time_s, plc, loop, one column per signal in register order,
/// logic_execution_delay_ms.
class StateLog {
public:
    StateLog(const std::filesystem::path& path, const std::vector<control::SignalDef>& columns);
    void write(const control::StateRow& row);
    void close() { sink_.close(); }
    std::uint64_t rows() const { return sink_.lines() - 1; }

private:
    TextSink sink_;
    std::size_t width_;
};

/// Closed interval of an attack, for phase tagging.
struct AttackWindow {
    int id = 0;
    std::string kind;
    SimTime start{0};
    SimTime end{0};
};

std::vector<AttackWindow> attack_windows(const std::deque<attack::AttackRecord>& records);

/// Ids of the windows containing t (start <= t <= end), ';'-joined; empty
/// means normal operation.
std::string attack_tag(const std::vector<AttackWindow>& windows, SimTime t);

/// metrics.csv: one row per delay or response sample, tagged with the
/// attack windows that contain its timestamp.
/// Columns: metric, time_s, source, target, index, value_ms, error, phase, attacks.
void write_metrics(const std::filesystem::path& path, const control::TimingMetrics& m,
                   const std::vector<AttackWindow>& windows);

/// attacks.jsonl: one JSON object per record.
class AttackLog {
public:
    explicit AttackLog(const std::filesystem::path& path) : sink_(path) {}
    void write(const attack::AttackRecord& r) { sink_.line(attack::to_json(r).dump()); }
    void close() { sink_.close(); }

private:
    TextSink sink_;
};

/// events.log: "<time_s> <source>: <message>".
class EventLog {
public:
    explicit EventLog(const std::filesystem::path& path) : sink_(path) {}
    void write(SimTime t, std::string_view source, std::string_view message);
    void close() { sink_.close(); }
    std::uint64_t lines() const { return sink_.lines(); }

private:
    TextSink sink_;
};

} // namespace icsbed::observer
