#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mtim {

// All randomness in the simulator flows through named streams derived from
// (seed, tag, index pair). Streams are independent of the order in which they
// are drawn, so adding devices/targets/trials never reshuffles existing draws.

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(uint64_t seed, std::string_view tag,
                                   uint64_t a = 0, uint64_t b = 0) {
    uint64_t s = splitmix64(seed ^ fnv1a64(tag));
    s = splitmix64(s ^ (a + 0x9e3779b97f4a7c15ull));
    s = splitmix64(s ^ (b + 0xd1b54a32d192ed03ull));
    return std::mt19937_64(s);
}

}  // namespace mtim
