#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <span>

namespace icsbed::modbus {

/// Two holding registers carrying one IEEE-754 binary32 value, big-endian,
/// high word at the lower address.
using RegisterPair = std::array<std::uint16_t, 2>;

constexpr RegisterPair float_to_regs(float x)
{
    const auto bits = std::bit_cast<std::uint32_t>(x);
    return {static_cast<std::uint16_t>(bits >> 16), static_cast<std::uint16_t>(bits & 0xFFFF)};
}

constexpr float regs_to_float(RegisterPair regs)
{
    return std::bit_cast<float>((static_cast<std::uint32_t>(regs[0]) << 16) | regs[1]);
}

inline float regs_to_float(std::span<const std::uint16_t> regs, std::size_t offset = 0)
{
    return regs_to_float(RegisterPair{regs[offset], regs[offset + 1]});
}

} // namespace icsbed::modbus
