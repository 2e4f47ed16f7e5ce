#pragma once
// Counter-based random number generation.
//
// Every stochastic operation in the library draws from a Philox4x32-10 stream
// addressed by (seed, stream). A draw is a pure function of
// (seed, stream, index), so results are reproducible for a given seed and
// independent of evaluation order or thread schedule; parallel workers get
// disjoint stream ids instead of shared mutable state.

#include <array>
#include <cstdint>

namespace mvfbm {

// Philox4x32-10 block cipher (Salmon et al. counter-based generator).
// Key = 64-bit seed, counter = 128 bits of (stream, block index).
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t seed) noexcept
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)) {}

    // Encrypts the counter (stream, block) into four 32-bit words.
    Block operator()(std::uint64_t stream, std::uint64_t block) const noexcept {
        std::uint32_t c0 = static_cast<std::uint32_t>(block);
        std::uint32_t c1 = static_cast<std::uint32_t>(block >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(stream);
        std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
        std::uint32_t k0 = key0_;
        std::uint32_t k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(c0);
            const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(c2);
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return {c0, c1, c2, c3};
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    std::uint32_t key0_;
    std::uint32_t key1_;
};

// Sequential view over one Philox stream producing uniforms and normals.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : philox_(seed), stream_(stream) {}

    // Uniform double in (0, 1] built from 53 bits.
    double next_uniform() noexcept {
        const std::uint64_t bits = next_u64();
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; draws are consumed in pairs.
    double next_normal() noexcept;

    // Fills out[0..n) with standard normals.
    void fill_normals(double* out, std::size_t n) noexcept;

    std::uint64_t next_u64() noexcept {
        if (word_pos_ == 0) {
            block_words_ = philox_(stream_, block_index_++);
            word_pos_ = 4;
        }
        const std::uint32_t lo = block_words_[4 - word_pos_];
        --word_pos_;
        if (word_pos_ == 0) {
            block_words_ = philox_(stream_, block_index_++);
            word_pos_ = 4;
        }
        const std::uint32_t hi = block_words_[4 - word_pos_];
        --word_pos_;
        return (static_cast<std::uint64_t>(hi) << 32) | lo;
    }

private:
    Philox4x32 philox_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    Philox4x32::Block block_words_{};
    int word_pos_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Stable stream-id derivation so call sites can address sub-streams
// (e.g. per particle, per replica) without collisions: splitmix64 of a
// purpose tag mixed with indices.
std::uint64_t derive_stream(std::uint64_t purpose, std::uint64_t a = 0,
                            std::uint64_t b = 0) noexcept;

// Fixed purpose tags; keep values stable, they are part of reproducibility.
namespace stream_purpose {
inline constexpr std::uint64_t kFbmPath = 1;
inline constexpr std::uint64_t kParticleDriving = 2;
inline constexpr std::uint64_t kZSample = 3;
inline constexpr std::uint64_t kCompanion = 4;
inline constexpr std::uint64_t kGaussianReference = 5;
inline constexpr std::uint64_t kModelProbe = 6;
inline constexpr std::uint64_t kTest = 99;
}  // namespace stream_purpose

}  // namespace mvfbm
