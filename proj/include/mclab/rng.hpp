#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mclab/errors.hpp"

namespace mclab {

// Counter-derived random streams. Every replicate (and every token-row inside
// a system) owns its stream, derived from (seed, index, tag), so results do
// not depend on scheduling. Sampling formulas are hand-rolled: the standard
// library distributions are implementation-defined and would break the
// byte-identical-output contract.

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s = mix64(s);
            word = s;
        }
        // xoshiro must not start from the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 0x9e3779b97f4a7c15ULL;
    }

    RandomStream(const RandomStream&) = delete;
    RandomStream& operator=(const RandomStream&) = delete;
    RandomStream(RandomStream&&) noexcept = default;
    RandomStream& operator=(RandomStream&&) noexcept = default;

    // xoshiro256**
    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53 significant bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Exp(rate); uniform() < 1 keeps the log argument positive
    double exponential(double rate) {
        if (!(rate > 0.0)) throw InvalidRate("exponential: rate must be positive");
        return -std::log1p(-uniform()) / rate;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal, Marsaglia polar with a cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    // index k with probability weights[k] / sum(weights); ties broken toward
    // the lower index, trailing slack lands on the last positive weight
    std::size_t pick_index(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw InvalidInput("pick_index: weights must have positive sum");
        const double u = uniform() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (weights[k] > 0.0) last_positive = k;
            acc += weights[k];
            if (u < acc) return k;
        }
        return last_positive;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Replicate k of a run seeded with `seed` always sees child_stream(seed, k),
// so it is reproducible in isolation and independent of thread count.
inline RandomStream child_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
    return RandomStream(mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL) ^ tag));
}

}  // namespace mclab
