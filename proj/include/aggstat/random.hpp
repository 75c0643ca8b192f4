#ifndef AGGSTAT_RANDOM_HPP
#define AGGSTAT_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace aggstat {

// SplitMix64 step. Used both as a stream whitener and to expand a
// (master seed, substream index) pair into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic, splittable random source.
//
// A RandomSource is addressed by (master_seed, substream). The substream
// derivation is a fixed mixing function: the master seed is whitened with
// one SplitMix64 step, the substream index (spread by the golden-ratio
// constant) is folded into the SplitMix64 state, and four further outputs
// seed a xoshiro256++ generator. The value of draw k is therefore a pure
// function of (master_seed, substream, k), and distinct substreams behave
// as statistically independent streams.
//
// Concurrent tasks must each own a distinct substream; a single
// RandomSource instance is not synchronized.
class RandomSource {
public:
    RandomSource(std::uint64_t master_seed, std::uint64_t substream)
        : master_seed_(master_seed), substream_(substream) {
        std::uint64_t sm = master_seed;
        (void)splitmix64(sm);
        sm ^= (substream + 1) * 0x9E3779B97F4A7C15ULL;
        s_[0] = splitmix64(sm);
        s_[1] = splitmix64(sm);
        s_[2] = splitmix64(sm);
        s_[3] = splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0)
            s_[0] = 1; // xoshiro forbids the all-zero state
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t substream() const { return substream_; }

    // xoshiro256++
    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform01_open_low() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal draw via Box-Muller (exact distribution, no
    // central-limit approximation). Pairs are generated two at a time;
    // the spare is cached, so draw k of a substream is still a pure
    // function of (seed, substream, k).
    double standard_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * standard_normal();
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Exact Binomial(n, p) as a sum of Bernoulli trials; O(n).
    std::int64_t binomial(std::int64_t n, double p) {
        if (n < 0)
            throw std::invalid_argument("binomial: trial count must be nonnegative");
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("binomial: probability must lie in [0, 1]");
        std::int64_t successes = 0;
        for (std::int64_t i = 0; i < n; ++i)
            successes += bernoulli(p) ? 1 : 0;
        return successes;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t master_seed_;
    std::uint64_t substream_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace aggstat

#endif // AGGSTAT_RANDOM_HPP
