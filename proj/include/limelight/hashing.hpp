#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "limelight/errors.hpp"

namespace limelight {

// FNV-1a, 64 bit. Used for input fingerprints in run manifests and for
// response cache keys. Not cryptographic; collisions are acceptable for
// both uses (a collision at worst reuses a cached response or reuses a
// run id for different inputs).

inline constexpr std::uint64_t fnv1a64_seed = 0xcbf29ce484222325ULL;

inline constexpr std::uint64_t fnv1a64(std::string_view data,
                                       std::uint64_t state = fnv1a64_seed) {
    for (unsigned char c : data) {
        state ^= c;
        state *= 0x100000001b3ULL;
    }
    return state;
}

inline std::string to_hex(std::uint64_t value) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

inline std::string fnv1a64_hex(std::string_view data) {
    return to_hex(fnv1a64(data));
}

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file for hashing: " + path);
    std::uint64_t state = fnv1a64_seed;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        state = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), state);
        if (!in) break;
    }
    return to_hex(state);
}

} // namespace limelight
