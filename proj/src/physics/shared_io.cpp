#include "icsbed/physics/shared_io.hpp"

#include <stdexcept>

namespace icsbed::physics {

void SharedIO::declare(std::string name, Side writer, double initial)
{
    auto [it, inserted] = entries_.try_emplace(std::move(name), Entry{initial, writer});
    if (!inserted) {
        throw std::logic_error("shared I/O entry declared twice: " + it->first);
    }
}

bool SharedIO::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const SharedIO::Entry& SharedIO::entry(std::string_view name) const
{
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range("no shared I/O entry named " + std::string(name));
    }
    return it->second;
}

double SharedIO::read(std::string_view name) const { return entry(name).value; }

Side SharedIO::writer(std::string_view name) const { return entry(name).writer; }

void SharedIO::write(Side side, std::string_view name, double value)
{
    auto& e = const_cast<Entry&>(entry(name));
    if (e.writer != side) {
        throw std::logic_error("write to " + std::string(name) + " from the wrong side");
    }
    e.value = value;
}

std::vector<std::string> SharedIO::names() const
{
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) {
        out.push_back(name);
    }
    return out;
}

} // namespace icsbed::physics
