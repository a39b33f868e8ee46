#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "icsbed/modbus/codec.hpp"

namespace icsbed::modbus {

/// Holding registers of one Modbus server. Only mapped addresses exist;
/// each mapped register is either client-writable or read-only over the
/// network. The owning device updates any register through store().
class RegisterFile {
public:
    void map_range(std::uint16_t start, std::uint16_t count, bool writable);

    bool mapped(std::uint16_t address) const { return cells_.contains(address); }
    bool writable(std::uint16_t address) const;

    /// Network read; IllegalDataAddress if any address in the range is unmapped.
    std::variant<std::vector<std::uint16_t>, ExceptionCode> read(std::uint16_t start, std::uint16_t quantity) const;

    /// Network write; IllegalDataAddress if any target is unmapped or read-only.
    /// Nothing is written when the request is rejected.
    std::optional<ExceptionCode> write(std::uint16_t start, const std::vector<std::uint16_t>& values);

    /// Device-side update; throws std::out_of_range for unmapped addresses.
    void store(std::uint16_t start, std::span<const std::uint16_t> values);
    std::uint16_t load(std::uint16_t address) const;

    std::size_t size() const { return cells_.size(); }

private:
    struct Cell {
        std::uint16_t value = 0;
        bool writable = false;
    };
    std::map<std::uint16_t, Cell> cells_;
};

/// Answers one decoded request against `registers`. Reads do not mutate;
/// writes mutate then echo (start, quantity). The transaction and unit id
/// are mirrored from the request.
Adu server_handle(RegisterFile& registers, const Adu& request);

} // namespace icsbed::modbus
