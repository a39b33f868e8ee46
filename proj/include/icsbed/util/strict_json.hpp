#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "icsbed/net/clock.hpp"

namespace icsbed::util {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be rejected. Every error is a std::invalid_argument whose
/// message starts with the dotted path of the offending key.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path);

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const std::string& path() const { return path_; }

    /// Marks the key consumed and returns it; throws if absent.
    const nlohmann::json& require(const std::string& key);
    /// Marks the key consumed; nullptr when absent.
    const nlohmann::json* optional(const std::string& key);

    double number(const std::string& key, std::optional<double> fallback = std::nullopt);
    std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback, std::int64_t lo, std::int64_t hi);
    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt);
    bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt);
    /// Seconds in the JSON, microseconds in memory.
    Duration seconds(const std::string& key, std::optional<Duration> fallback = std::nullopt);

    /// Throws on any key not consumed so far.
    void finish() const;

    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> used_;
};

double as_number(const nlohmann::json& j, const std::string& path);
std::int64_t as_integer(const nlohmann::json& j, const std::string& path, std::int64_t lo, std::int64_t hi);
std::string as_string(const nlohmann::json& j, const std::string& path);

/// Seconds as a JSON number, exact for whole microseconds.
nlohmann::json seconds_json(Duration d);

} // namespace icsbed::util
