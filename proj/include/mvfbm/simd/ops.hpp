#pragma once
// Data-parallel inner-loop kernels: scalar reference implementations plus
// AVX2 variants selected once at startup from cpuid. All callers go through
// the dispatched table; tests pin scalar vs. active-variant equivalence.
//
// Conventions shared by all implementations of a kernel (so variants agree
// to rounding noise): the Gaussian KDE kernel is truncated at |u| > 8
// (relative mass below 2e-14), and the curvature term in mf_step is the
// bounded rational x / (1 + x^2).

#include <cstddef>
#include <string>

namespace mvfbm::simd {

struct KdeSums {
    double w0;  // sum of exp(-u_i^2 / 2)
    double w1;  // sum of u_i * exp(-u_i^2 / 2)
};

struct Ops {
    // KDE sums at evaluation point x with u_i = (x - xs[i]) * inv_bw.
    KdeSums (*kde_sums)(const double* xs, std::size_t n, double x,
                        double inv_bw);
    // Symmetric KDE accumulation over sorted points: for every pair
    // k < j < hi[k], with u = (xs[k] - xs[j]) * inv_bw and
    // e = exp(-u^2/2), adds e to w0[k] and w0[j], u*e to w1[k], and
    // -u*e to w1[j].  Self terms (j == k) are the caller's to seed.
    void (*kde_pair_sweep)(const double* xs, std::size_t n,
                           const std::size_t* hi, double inv_bw, double* w0,
                           double* w1);
    // In-place particle update:
    // x[i] += c_lin*x[i] + c_const + c_curv * x[i]/(1 + x[i]^2) + c_noise*db[i]
    void (*mf_step)(double* x, const double* db, std::size_t n, double c_lin,
                    double c_const, double c_curv, double c_noise);
    double (*sum)(const double* x, std::size_t n);
    // sum over i of (x[i] - center)^2
    double (*sum_sq_dev)(const double* x, std::size_t n, double center);
    // sum over i of (a[i] - b[i])^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    // m[i] = max(m[i], |x[i] - center|)
    void (*max_abs_dev_update)(double* m, const double* x, std::size_t n,
                               double center);
    double (*dot)(const double* a, const double* b, std::size_t n);
    const char* name;
};

// Active kernel table. Resolved on first use: AVX2+FMA when the CPU has
// them, scalar otherwise. MVFBM_SIMD=scalar|avx2 in the environment forces
// a lane (unsupported forcing falls back to scalar).
const Ops& ops();

// Named tables for equivalence testing.
const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unsupported by CPU or build

// Scalar exp shared by every lane's KDE kernel (degree-11 polynomial,
// two-part ln2 reduction; valid for x in [-45, 0], relative error ~1e-14).
double fast_exp_neg(double x);

}  // namespace mvfbm::simd
