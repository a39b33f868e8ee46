#include "icsbed/observer/logs.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace icsbed::observer {

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string seconds6(SimTime t)
{
    const auto us = t.count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(us / 1000000),
                  static_cast<long long>(us % 1000000));
    return buf;
}

TextSink::TextSink(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc)
{
    if (!out_) {
        throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
    }
}

void TextSink::check(const char* what)
{
    if (!out_) {
        throw std::runtime_error(std::string(what) + " " + path_.string() + " failed");
    }
}

void TextSink::line(std::string_view text)
{
    out_ << text << '\n';
    check("write to");
    ++lines_;
}

void TextSink::flush()
{
    out_.flush();
    check("flush of");
}

void TextSink::close()
{
    if (!out_.is_open()) return;
    out_.flush();
    check("flush of");
    out_.close();
    check("close of");
}

StateLog::StateLog(const std::filesystem::path& path, const std::vector<control::SignalDef>& columns)
    : sink_(path), width_(columns.size())
{
    std::string header = "time_s,plc,loop";
    for (const auto& c : columns) header += "," + c.name;
    header += ",logic_execution_delay_ms";
    sink_.line(header);
}

void StateLog::write(const control::StateRow& row)
{
    if (row.values.size() != width_) {
        throw std::logic_error("state row width does not match the column set");
    }
    std::string s = seconds6(row.time) + "," + std::to_string(row.plc) + "," + std::to_string(row.loop);
    for (double v : row.values) s += "," + fixed6(v);
    s += "," + fixed6(to_millis(row.delay));
    sink_.line(s);
}

std::vector<AttackWindow> attack_windows(const std::deque<attack::AttackRecord>& records)
{
    std::vector<AttackWindow> out;
    for (const auto& r : records) {
        if (!r.end) continue;
        out.push_back(AttackWindow{r.id, attack::to_string(r.config.kind), r.start, *r.end});
    }
    return out;
}

std::string attack_tag(const std::vector<AttackWindow>& windows, SimTime t)
{
    std::string s;
    for (const auto& w : windows) {
        if (t >= w.start && t <= w.end) {
            if (!s.empty()) s += ";";
            s += std::to_string(w.id);
        }
    }
    return s;
}

void write_metrics(const std::filesystem::path& path, const control::TimingMetrics& m,
                   const std::vector<AttackWindow>& windows)
{
    TextSink sink(path);
    sink.line("metric,time_s,source,target,index,value_ms,error,phase,attacks");
    auto row = [&](const char* metric, SimTime t, const std::string& src, const std::string& dst, std::uint64_t index,
                   Duration value, const char* error) {
        const auto tag = attack_tag(windows, t);
        sink.line(std::string(metric) + "," + seconds6(t) + "," + src + "," + dst + "," + std::to_string(index) + "," +
                  fixed6(to_millis(value)) + "," + error + "," + (tag.empty() ? "normal" : "attack") + "," + tag);
    };
    for (const auto& d : m.delays) {
        row("logic_execution_delay", d.release, "plc" + std::to_string(d.plc), "", d.loop, d.delay, "");
    }
    for (const auto& r : m.responses) {
        row("response_time", r.sent_at, r.client, r.server, r.transaction_id, r.rtt,
            r.error == modbus::ClientError::None ? "" : modbus::to_string(r.error));
    }
    sink.close();
}

void EventLog::write(SimTime t, std::string_view source, std::string_view message)
{
    std::string s = seconds6(t) + " ";
    s += source;
    s += ": ";
    s += message;
    sink_.line(s);
}

} // namespace icsbed::observer
