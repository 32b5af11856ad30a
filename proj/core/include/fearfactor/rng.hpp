#pragma once

#include <cstdint>
#include <limits>

namespace fearfactor {

/// Counter-based generator: the i-th draw of a stream is a pure function of
/// (key, i), so streams can be generated in any order or in parallel and still
/// reproduce bit-for-bit.
///
/// Algorithm (identical constants must be used by any port):
///   mix(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///            z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
///   key(seed, stream) = mix(seed ^ mix(stream + 0x9E3779B97F4A7C15))
///   u64_i             = mix(key + (i + 1) * 0x9E3779B97F4A7C15)   (wrapping)
///   uniform_i         = ((u64_i >> 11) + 0.5) * 2^-53            in (0, 1)
///   normal            = sqrt(-2 ln u1) * cos(2 pi u2), two consecutive uniforms,
///                       no caching of the sine branch.
class CounterRng {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ mix(stream + kGolden))) {}

    /// Independent child stream; used for per-firm splitting.
    [[nodiscard]] constexpr CounterRng split(std::uint64_t child) const { return CounterRng(key_, child); }

    constexpr std::uint64_t operator()() { return mix(key_ + (++counter_) * kGolden); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

    [[nodiscard]] constexpr std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace fearfactor
