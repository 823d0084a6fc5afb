#pragma once

#include <bit>
#include <cstdint>
#include <limits>

namespace jumpcalc {

namespace detail {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) noexcept
{
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t bits_of(double x) noexcept
{
    // +0.0 and -0.0 must key the same stream.
    return x == 0.0 ? 0 : std::bit_cast<std::uint64_t>(x);
}

} // namespace detail

/// Address of an independent random substream.
///
/// A stream is identified by the master seed and a 64-bit index. Child
/// streams are derived by hashing the parent index with a caller-chosen key,
/// so any tree of (path, evaluation point, inner sample) coordinates maps to
/// a fixed stream regardless of which worker consumes it.
struct SeedStream
{
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    [[nodiscard]] constexpr SeedStream child(std::uint64_t key) const noexcept
    {
        return {seed, detail::combine(index, key)};
    }

    [[nodiscard]] SeedStream child(double key) const noexcept
    {
        return child(detail::bits_of(key));
    }

    friend constexpr bool operator==(SeedStream, SeedStream) = default;
};

/// Counter-based generator: output k of stream (seed, index) is
/// mix64(key + k * golden) with key = combine(seed, index).
/// Satisfies UniformRandomBitGenerator.
class StreamEngine
{
  public:
    using result_type = std::uint64_t;

    explicit constexpr StreamEngine(SeedStream s) noexcept
        : key_(detail::combine(s.seed, s.index))
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept
    {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return detail::mix64(key_ + counter_);
    }

    /// Uniform draw on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform draw on (0, 1].
    constexpr double uniform_open_left() noexcept { return 1.0 - uniform(); }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace jumpcalc
