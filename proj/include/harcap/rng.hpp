#pragma once

#include <cstdint>
#include <string_view>

namespace harcap {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a; stable across processes and platforms.
inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based generator: draw(i) is a pure function of (key, i), so
/// streams can be split and replayed without shared state.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) : key_(splitmix64(seed)) {}

    constexpr std::uint64_t draw(std::uint64_t counter) const {
        return splitmix64(key_ ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    constexpr double uniform(std::uint64_t counter) const {
        return static_cast<double>(draw(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound); bound must be positive.
    constexpr std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const {
        return static_cast<std::uint64_t>(uniform(counter) * static_cast<double>(bound)) % bound;
    }

    /// Independent child stream.
    constexpr CounterRng split(std::uint64_t stream) const {
        return CounterRng(key_ ^ splitmix64(~stream));
    }

    constexpr std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

}  // namespace harcap
