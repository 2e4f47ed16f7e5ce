#pragma once
// Shared constants for the polynomial exp used by the KDE kernels.
// Both the scalar reference and the AVX2 variant implement exactly this
// scheme so lane equivalence holds to rounding noise:
//   n = nearbyint(x * log2(e));  r = x - n*ln2_hi - n*ln2_lo
//   exp(x) = 2^n * sum_{k=0..11} r^k / k!
// Domain of use: x in [-45, 0] (KDE truncates at u^2/2 = 32), where the
// Taylor remainder on |r| <= 0.3466 is below 9e-15 relative.

namespace mvfbm::simd::detail {

inline constexpr double kLog2E = 1.44269504088896340736;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;  // 33 high bits
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

inline constexpr double kExpC[12] = {
    1.0,
    1.0,
    0.5,
    1.6666666666666666667e-1,
    4.1666666666666666667e-2,
    8.3333333333333333333e-3,
    1.3888888888888888889e-3,
    1.9841269841269841270e-4,
    2.4801587301587301587e-5,
    2.7557319223985890653e-6,
    2.7557319223985890653e-7,
    2.5052108385441718775e-8,
};

}  // namespace mvfbm::simd::detail
