#pragma once
// Deterministic quadrature building blocks.
//
// The fractional kernels integrated here have power-law endpoint behavior
// (u - a)^g with g in (-1, 0); those integrals are handled by the power
// substitution w = (u - a)^(1 - |g|)-style changes of variable at the call
// sites, after which a fixed 32-point Gauss-Legendre rule per panel applies.
// Geometric panel grading concentrates panels toward an endpoint where the
// transformed integrand still varies fast.

#include <cstddef>
#include <functional>

namespace mvfbm::quad {

inline constexpr int kGlPoints = 32;
extern const double kGl32Nodes[32];    // on (-1, 1), ascending
extern const double kGl32Weights[32];  // sum to 2

// Single-panel 32-point Gauss-Legendre of f over [a, b].
template <class F>
double gl32(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kGlPoints; ++i) {
        acc += kGl32Weights[i] * f(mid + half * kGl32Nodes[i]);
    }
    return acc * half;
}

enum class GradeTowards { kLower, kUpper };

// Composite GL32 over [a, b] with n_panels panels whose widths shrink
// geometrically (factor `ratio` > 1) toward the graded endpoint.
template <class F>
double gl32_graded(F&& f, double a, double b, int n_panels, double ratio,
                   GradeTowards towards) {
    if (!(b > a)) {
        return 0.0;
    }
    // Widths proportional to ratio^k with the smallest panel at the graded
    // end; accumulate from the far end so edges are computed smallest-last.
    double total_weight = 0.0;
    double w = 1.0;
    for (int k = 0; k < n_panels; ++k) {
        total_weight += w;
        w *= ratio;
    }
    const double len = b - a;
    double acc = 0.0;
    double edge = (towards == GradeTowards::kUpper) ? a : b;
    double panel = len * w / ratio / total_weight;  // widest panel first
    for (int k = 0; k < n_panels; ++k) {
        double lo, hi;
        if (towards == GradeTowards::kUpper) {
            lo = edge;
            hi = (k + 1 == n_panels) ? b : edge + panel;
            edge = hi;
        } else {
            hi = edge;
            lo = (k + 1 == n_panels) ? a : edge - panel;
            edge = lo;
        }
        acc += gl32(f, lo, hi);
        panel /= ratio;
    }
    return acc;
}

}  // namespace mvfbm::quad
