#include "icsbed/util/strict_json.hpp"

#include <cmath>
#include <stdexcept>

namespace icsbed::util {

using nlohmann::json;

StrictObject::StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path))
{
    if (!j_.is_object()) {
        throw std::invalid_argument((path_.empty() ? std::string("config") : path_) + ": expected an object");
    }
}

void StrictObject::fail(const std::string& key, const std::string& what) const
{
    throw std::invalid_argument(path(key) + ": " + what);
}

const json& StrictObject::require(const std::string& key)
{
    if (!j_.contains(key)) {
        fail(key, "required key missing");
    }
    used_.insert(key);
    return j_.at(key);
}

const json* StrictObject::optional(const std::string& key)
{
    if (!j_.contains(key)) {
        return nullptr;
    }
    used_.insert(key);
    return &j_.at(key);
}

double as_number(const json& j, const std::string& path)
{
    if (!j.is_number()) {
        throw std::invalid_argument(path + ": expected a number, got " + j.dump());
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw std::invalid_argument(path + ": must be finite");
    }
    return v;
}

std::int64_t as_integer(const json& j, const std::string& path, std::int64_t lo, std::int64_t hi)
{
    if (!j.is_number_integer()) {
        throw std::invalid_argument(path + ": expected an integer, got " + j.dump());
    }
    std::int64_t v = 0;
    if (j.is_number_unsigned()) {
        const auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(hi)) {
            throw std::invalid_argument(path + ": " + j.dump() + " out of range [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
        }
        v = static_cast<std::int64_t>(u);
    } else {
        v = j.get<std::int64_t>();
    }
    if (v < lo || v > hi) {
        throw std::invalid_argument(path + ": " + j.dump() + " out of range [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
    }
    return v;
}

std::string as_string(const json& j, const std::string& path)
{
    if (!j.is_string()) {
        throw std::invalid_argument(path + ": expected a string, got " + j.dump());
    }
    return j.get<std::string>();
}

double StrictObject::number(const std::string& key, std::optional<double> fallback)
{
    const json* v = fallback ? optional(key) : &require(key);
    return v ? as_number(*v, path(key)) : *fallback;
}

std::int64_t StrictObject::integer(const std::string& key, std::optional<std::int64_t> fallback, std::int64_t lo,
                                   std::int64_t hi)
{
    const json* v = fallback ? optional(key) : &require(key);
    return v ? as_integer(*v, path(key), lo, hi) : *fallback;
}

std::string StrictObject::string(const std::string& key, std::optional<std::string> fallback)
{
    const json* v = fallback ? optional(key) : &require(key);
    return v ? as_string(*v, path(key)) : *fallback;
}

bool StrictObject::boolean(const std::string& key, std::optional<bool> fallback)
{
    const json* v = fallback ? optional(key) : &require(key);
    if (!v) {
        return *fallback;
    }
    if (!v->is_boolean()) {
        fail(key, "expected true or false, got " + v->dump());
    }
    return v->get<bool>();
}

Duration StrictObject::seconds(const std::string& key, std::optional<Duration> fallback)
{
    const json* v = fallback ? optional(key) : &require(key);
    if (!v) {
        return *fallback;
    }
    const double s = as_number(*v, path(key));
    if (s < 0) {
        fail(key, "must not be negative");
    }
    if (s > 1e9) {
        fail(key, "unreasonably large");
    }
    return from_seconds(s);
}

void StrictObject::finish() const
{
    for (const auto& [k, v] : j_.items()) {
        if (!used_.contains(k)) {
            fail(k, "unknown key");
        }
    }
}

json seconds_json(Duration d)
{
    if (d.count() % 1000000 == 0) {
        return d.count() / 1000000;
    }
    return to_seconds(d);
}

} // namespace icsbed::util
