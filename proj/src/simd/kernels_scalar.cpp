#include <cmath>
#include <cstdint>

#include "mvfbm/simd/ops.hpp"
#include "exp_poly.hpp"

namespace mvfbm::simd {

double fast_exp_neg(double x) {
    using namespace detail;
    const double nf = std::nearbyint(x * kLog2E);
    double r = x - nf * kLn2Hi;
    r = r - nf * kLn2Lo;
    double p = kExpC[11];
    for (int k = 10; k >= 0; --k) {
        p = p * r + kExpC[k];
    }
    // 2^n by exponent-field construction; n is in [-65, 1] for our domain.
    const auto n = static_cast<std::int64_t>(nf);
    std::uint64_t bits = static_cast<std::uint64_t>(n + 1023) << 52;
    double scale;
    static_assert(sizeof(scale) == sizeof(bits));
    __builtin_memcpy(&scale, &bits, sizeof(bits));
    return p * scale;
}

namespace scalar {

KdeSums kde_sums(const double* xs, std::size_t n, double x, double inv_bw) {
    double w0 = 0.0;
    double w1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (x - xs[i]) * inv_bw;
        const double half_u2 = 0.5 * u * u;
        if (half_u2 > 32.0) {
            continue;
        }
        const double e = fast_exp_neg(-half_u2);
        w0 += e;
        w1 += u * e;
    }
    return {w0, w1};
}

void kde_pair_sweep(const double* xs, std::size_t n, const std::size_t* hi,
                    double inv_bw, double* w0, double* w1) {
    for (std::size_t k = 0; k < n; ++k) {
        const double xk = xs[k];
        const std::size_t end = hi[k];
        double acc0 = 0.0;
        double acc1 = 0.0;
        for (std::size_t j = k + 1; j < end; ++j) {
            const double u = (xk - xs[j]) * inv_bw;
            const double half_u2 = 0.5 * u * u;
            if (half_u2 > 32.0) {
                continue;
            }
            const double e = fast_exp_neg(-half_u2);
            const double ue = u * e;
            acc0 += e;
            acc1 += ue;
            w0[j] += e;
            w1[j] -= ue;
        }
        w0[k] += acc0;
        w1[k] += acc1;
    }
}

void mf_step(double* x, const double* db, std::size_t n, double c_lin,
             double c_const, double c_curv, double c_noise) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double curv = xi / (1.0 + xi * xi);
        x[i] = xi + c_lin * xi + c_const + c_curv * curv + c_noise * db[i];
    }
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double sum_sq_dev(const double* x, std::size_t n, double center) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - center;
        acc += d * d;
    }
    return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void max_abs_dev_update(double* m, const double* x, std::size_t n,
                        double center) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(x[i] - center);
        if (d > m[i]) {
            m[i] = d;
        }
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

}  // namespace scalar

const Ops& scalar_ops() {
    static const Ops table{
        scalar::kde_sums,       scalar::kde_pair_sweep,
        scalar::mf_step,        scalar::sum,
        scalar::sum_sq_dev,     scalar::sum_sq_diff,
        scalar::max_abs_dev_update,
        scalar::dot,            "scalar",
    };
    return table;
}

}  // namespace mvfbm::simd
