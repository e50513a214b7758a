#include "mamo/seeds.hpp"

namespace mamo {

std::uint64_t subseed(std::uint64_t seed, std::string_view label) {
    // FNV-1a over the label, then mixed with the run seed.
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return mix64(seed ^ h);
}

}  // namespace mamo
