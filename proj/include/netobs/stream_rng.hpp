#pragma once

#include <cstdint>
#include <limits>

namespace netobs {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key for an independent stream identified by (seed, tag, a, b).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0,
                                   std::uint64_t b = 0) noexcept {
    std::uint64_t k = mix64(seed + 0x9e3779b97f4a7c15ULL);
    k = mix64(k ^ (tag * 0xd1b54a32d192ed03ULL));
    k = mix64(k ^ (a + 0x8cb92ba72f3d8dd7ULL));
    return mix64(k ^ (b * 0xaef17502108ef2d9ULL + 1));
}

/// Counter-based splitmix64 generator; satisfies UniformRandomBitGenerator.
class StreamRng {
public:
    using result_type = std::uint64_t;
    explicit constexpr StreamRng(std::uint64_t key) noexcept : state_(key) {}
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_draw(StreamRng& r) noexcept {
    return static_cast<double>(r() >> 11) * 0x1.0p-53;
}

}  // namespace netobs
