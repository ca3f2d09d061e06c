#pragma once

#include <array>
#include <cstdint>

namespace utweak {

/// Philox4x32-10 block function: 128-bit counter, 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based source of standard normals. The value for
/// (seed, path, step, channel) is a pure function of those four numbers.
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Standard normal for one channel.
    double normal(std::uint64_t path, std::uint32_t step, std::uint32_t channel) const;

    /// Fills out[0..count) with the normals of channels 0..count-1.
    void normals(std::uint64_t path, std::uint32_t step, int count, double* out) const;

    /// Uniform in (0, 1) with 53 random bits; `word` selects one of two per block.
    double uniform(std::uint64_t path, std::uint32_t step, std::uint32_t block, int word) const;

private:
    std::array<std::uint32_t, 4> block(std::uint64_t path, std::uint32_t step,
                                       std::uint32_t index) const;
    std::uint64_t seed_;
};

/// Default master seed.
inline constexpr std::uint64_t kDefaultSeed = 0x5DE5EED0ULL;

}  // namespace utweak
