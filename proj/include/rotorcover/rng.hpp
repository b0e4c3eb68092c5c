#pragma once

#include <cstdint>

namespace rotorcover {

// SplitMix64 finalizer. Used both as a sequential PRNG and as a counter-based
// generator keyed by (seed, vertex path hash), so rotor samples do not depend
// on the order in which the tree happens to be materialized.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline double unit_from_bits(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53; // [0, 1)
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    double next_unit() { return unit_from_bits(next()); }

private:
    std::uint64_t state_;
};

} // namespace rotorcover
