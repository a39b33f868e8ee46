#include "icsbed/net/rng.hpp"

namespace icsbed {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng derive_stream(std::uint64_t scenario_seed, std::string_view consumer)
{
    // FNV-1a over the consumer name, folded into the scenario seed.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : consumer) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return Rng{splitmix64(splitmix64(scenario_seed) ^ h)};
}

} // namespace icsbed
