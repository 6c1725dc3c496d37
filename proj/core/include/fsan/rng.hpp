#ifndef FSAN_RNG_HPP
#define FSAN_RNG_HPP

#include <cstdint>

namespace fsan
{

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mixes several 64-bit words into one seed. Used to derive per-cell and
/// per-trial seeds from a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept
{
    std::uint64_t h = splitmix64_mix(base + 0x9e3779b97f4a7c15ULL);
    h = splitmix64_mix(h ^ (a + 0x632be59bd9b4e019ULL));
    h = splitmix64_mix(h ^ (b + 0x85157af5ee3c5f3bULL));
    return h;
}

///
/// Counter-based SplitMix64 generator.
///
/// The i-th output (i = 0, 1, ...) of stream `s` under seed `seed` is
///
///     key    = splitmix64_mix(seed ^ splitmix64_mix(s + 0x9e3779b97f4a7c15))
///     out(i) = splitmix64_mix(key + (i + 1) * 0x9e3779b97f4a7c15)
///
/// so any draw can be recomputed from (seed, stream, counter) alone. Uniform
/// doubles take the top 53 bits: `(out >> 11) * 2^-53`, which lies in [0, 1).
///
class CounterRng
{
public:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(splitmix64_mix(seed ^ splitmix64_mix(stream + kGamma)))
    {
    }

    constexpr std::uint64_t next_u64() noexcept
    {
        ++counter_;
        return splitmix64_mix(key_ + counter_ * kGamma);
    }

    /// Uniform on [0, 1).
    constexpr double uniform() noexcept
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    constexpr double uniform(double lo, double hi) noexcept
    {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). `n` must be positive.
    constexpr std::uint64_t below(std::uint64_t n) noexcept
    {
        auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace fsan

#endif // FSAN_RNG_HPP
