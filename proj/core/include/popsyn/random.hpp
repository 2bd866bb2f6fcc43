#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace popsyn {

/// SplitMix64 generator. Small state, so a fresh stream per row is cheap.
/// Satisfies UniformRandomBitGenerator.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

/// Uniform double in [0, 1) from the top 53 bits.
template <class Rng> double uniform01(Rng &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Mixes two 64-bit values into one; used for (seed, index) stream derivation.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    SplitMix64 g{a ^ (b * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL)};
    g();
    return g();
}

inline std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for one pipeline stage: derived from (master seed, stage name, bucket).
/// Adding a new stage never changes the seeds of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t bucket = 0) noexcept {
    return mix_seed(mix_seed(master, fnv1a(stage)), bucket);
}

} // namespace popsyn
