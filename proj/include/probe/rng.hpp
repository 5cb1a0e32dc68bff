#pragma once

#include <cstdint>

namespace probe {

// Deterministic RNG with platform-independent output. std::mt19937_64 has a
// standardized bit stream, but the <random> distributions do not, so the
// uniform/normal transforms are written out explicitly here.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // uniform in [0, 1)
    double uniform();
    double uniform(double lo, double hi);

    // standard normal via Box-Muller, one spare cached
    double normal();
    double normal(double mean, double stddev);

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);

    // derived stream, independent of draw order on this one
    Rng fork(std::uint64_t salt) const;

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// stable per-(seed, node, purpose) stream so per-node work is schedule-independent
Rng node_stream(std::uint64_t global_seed, int node, std::uint64_t purpose);

}  // namespace probe
