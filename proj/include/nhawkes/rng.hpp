#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nhawkes {

/// Mixes a master seed with a list of tags into an independent stream seed
/// (SplitMix64 finalizer chained over the tags).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master,
                                        std::initializer_list<std::uint64_t> tags);

/// Seedable, splittable 64-bit generator. Variates are produced from the raw
/// mt19937_64 output with explicit transforms so that streams are identical
/// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Child generator whose stream depends only on (seed, tag).
    [[nodiscard]] Rng split(std::uint64_t tag) const { return Rng(derive_seed(seed_, {tag})); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential variate with the given rate (mean 1/rate).
    double exponential(double rate);

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace nhawkes
