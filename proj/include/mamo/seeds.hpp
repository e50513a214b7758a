#pragma once

#include <cstdint>
#include <string_view>

namespace mamo {

// Finalizer from the splitmix64 generator; good avalanche, cheap, stable
// across platforms.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stable sub-stream seed for a named stage of a run.
std::uint64_t subseed(std::uint64_t seed, std::string_view label);

// Maps a 64-bit word onto [0, 1) using its top 53 bits. The standard
// distributions are implementation defined; this one is portable.
constexpr double to_unit(std::uint64_t word) {
    return static_cast<double>(word >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace mamo
