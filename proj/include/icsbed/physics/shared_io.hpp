#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace icsbed::physics {

/// Who may write an entry. Sensors are written by the plant and read by
/// PLCs; actuators the other way round.
enum class Side { Plant, Plc };

/// The hardwired I/O between plant and PLCs: a flat table of named float
/// values, each with a single writer side.
class SharedIO {
public:
    void declare(std::string name, Side writer, double initial = 0.0);

    bool contains(std::string_view name) const;
    double read(std::string_view name) const;
    /// Throws std::logic_error when `side` does not own the entry and
    /// std::out_of_range for undeclared names.
    void write(Side side, std::string_view name, double value);

    Side writer(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    struct Entry {
        double value = 0.0;
        Side writer = Side::Plant;
    };
    const Entry& entry(std::string_view name) const;

    std::map<std::string, Entry, std::less<>> entries_;
};

} // namespace icsbed::physics
