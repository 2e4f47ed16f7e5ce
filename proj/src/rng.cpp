#include "mvfbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvfbm {

double RandomStream::next_normal() noexcept {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(phi);
    has_cached_normal_ = true;
    return r * std::cos(phi);
}

void RandomStream::fill_normals(double* out, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = next_normal();
    }
}

std::uint64_t derive_stream(std::uint64_t purpose, std::uint64_t a,
                            std::uint64_t b) noexcept {
    // splitmix64 finalization over a linear combination of the inputs.
    auto mix = [](std::uint64_t x) noexcept {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    };
    std::uint64_t h = mix(purpose);
    h = mix(h ^ a);
    h = mix(h ^ (b + 0x5851F42D4C957F2Dull));
    return h;
}

}  // namespace mvfbm
