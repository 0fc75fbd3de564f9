#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace cmdplp {

/// Seeded pseudo-random stream. Uniform doubles are produced from the raw 64-bit
/// engine output so that sample streams do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream for replicate `stream` of a run seeded with `seed`.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Index drawn from a probability vector by inverse CDF. The last index with
    /// positive mass absorbs rounding slack.
    std::size_t discrete(std::span<const double> probs);

    std::uint64_t next_u64() { return engine_(); }

    // UniformRandomBitGenerator, for the standard distributions used by batch sampling.
    using result_type = std::uint64_t;
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

} // namespace cmdplp
