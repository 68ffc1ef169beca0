#pragma once

#include <cmath>
#include <cstdint>

namespace tvfluid {

/// Counter-based generator: output k is a strong 64-bit mix of (key, k), so
/// streams keyed by (seed, replication) are independent and reproduce exactly
/// regardless of how replications are scheduled across threads.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ (0x9e3779b97f4a7c15ull + stream * 0xbf58476d1ce4e5b9ull))),
          counter_(0) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as an argument to log().
    double uniform_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace tvfluid
