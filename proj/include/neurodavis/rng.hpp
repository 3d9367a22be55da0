#ifndef NEURODAVIS_RNG_HPP
#define NEURODAVIS_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace neurodavis {

/**
 * Portable seeded generator.
 *
 * SplitMix64 (Steele, Lea & Flood 2014): the state is a counter advanced by a
 * fixed odd increment and each output is a bijective 64-bit mix of it. All
 * derived draws (uniform reals, normals, bounded integers, shuffles) are
 * implemented here rather than through <random> distributions, whose outputs
 * are implementation-defined, so a seed reproduces the same sequence on
 * every platform and standard library.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Unbiased integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent child generator for a labelled sub-stream.
    Rng fork(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; also used to hash seeds together.
std::uint64_t mix64(std::uint64_t x);

}  // namespace neurodavis

#endif
