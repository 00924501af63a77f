#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "advdial/tensor.hpp"

namespace advdial {

/// Explicit random stream. Every stochastic operation in the project takes
/// one of these; there is no global RNG state. The raw draws are mapped to
/// doubles by hand so results do not depend on libstdc++ distribution
/// internals and streams round-trip bit-exactly through checkpoints.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw ConfigError("uniform_index: empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t raw() { return engine_(); }

    /// Derives an independent stream; deterministic in (seed path, id).
    Rng substream(std::uint64_t id) {
        std::uint64_t a = engine_();
        return Rng(a ^ (0x9e3779b97f4a7c15ULL * (id + 1)));
    }

    void save(std::ostream& os) const { os << engine_; }
    void load(std::istream& is) { is >> engine_; }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace advdial
