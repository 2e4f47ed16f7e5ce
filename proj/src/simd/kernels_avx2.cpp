// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and only ever executed after a runtime cpuid check
// (see dispatch.cpp), so the rest of the library stays baseline-ISA.

#include "mvfbm/simd/ops.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "exp_poly.hpp"

namespace mvfbm::simd {
namespace avx2 {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s2 = _mm_add_pd(lo, hi);
    const __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
    return _mm_cvtsd_f64(s1);
}

// Vector version of fast_exp_neg; same reduction and polynomial as the
// scalar reference. Valid for x in [-45, 0].
inline __m256d exp_neg_pd(__m256d x) {
    using namespace detail;
    const __m256d nf = _mm256_round_pd(
        _mm256_mul_pd(x, _mm256_set1_pd(kLog2E)),
        _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(nf, _mm256_set1_pd(kLn2Hi), x);
    r = _mm256_fnmadd_pd(nf, _mm256_set1_pd(kLn2Lo), r);
    __m256d p = _mm256_set1_pd(kExpC[11]);
    for (int k = 10; k >= 0; --k) {
        p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kExpC[k]));
    }
    const __m128i n32 = _mm256_cvtpd_epi32(nf);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i bits =
        _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

}  // namespace

KdeSums kde_sums(const double* xs, std::size_t n, double x, double inv_bw) {
    const __m256d xv = _mm256_set1_pd(x);
    const __m256d ibw = _mm256_set1_pd(inv_bw);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d cut = _mm256_set1_pd(32.0);
    const __m256d clamp = _mm256_set1_pd(33.0);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d s = _mm256_loadu_pd(xs + i);
        const __m256d u = _mm256_mul_pd(_mm256_sub_pd(xv, s), ibw);
        const __m256d hu2 = _mm256_mul_pd(half, _mm256_mul_pd(u, u));
        const __m256d keep = _mm256_cmp_pd(hu2, cut, _CMP_LE_OQ);
        const __m256d arg =
            _mm256_sub_pd(_mm256_setzero_pd(), _mm256_min_pd(hu2, clamp));
        __m256d e = exp_neg_pd(arg);
        e = _mm256_and_pd(e, keep);
        acc0 = _mm256_add_pd(acc0, e);
        acc1 = _mm256_fmadd_pd(u, e, acc1);
    }
    double w0 = hsum(acc0);
    double w1 = hsum(acc1);
    for (; i < n; ++i) {
        const double u = (x - xs[i]) * inv_bw;
        const double hu2 = 0.5 * u * u;
        if (hu2 > 32.0) {
            continue;
        }
        const double e = fast_exp_neg(-hu2);
        w0 += e;
        w1 += u * e;
    }
    return {w0, w1};
}

void kde_pair_sweep(const double* xs, std::size_t n, const std::size_t* hi,
                    double inv_bw, double* w0, double* w1) {
    const __m256d ibw = _mm256_set1_pd(inv_bw);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d cut = _mm256_set1_pd(32.0);
    const __m256d clamp = _mm256_set1_pd(33.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double xk = xs[k];
        const std::size_t end = hi[k];
        const __m256d xv = _mm256_set1_pd(xk);
        __m256d acc0v = _mm256_setzero_pd();
        __m256d acc1v = _mm256_setzero_pd();
        std::size_t j = k + 1;
        for (; j + 4 <= end; j += 4) {
            const __m256d s = _mm256_loadu_pd(xs + j);
            const __m256d u = _mm256_mul_pd(_mm256_sub_pd(xv, s), ibw);
            const __m256d hu2 = _mm256_mul_pd(half, _mm256_mul_pd(u, u));
            const __m256d keep = _mm256_cmp_pd(hu2, cut, _CMP_LE_OQ);
            const __m256d arg =
                _mm256_sub_pd(_mm256_setzero_pd(), _mm256_min_pd(hu2, clamp));
            __m256d e = exp_neg_pd(arg);
            e = _mm256_and_pd(e, keep);
            const __m256d ue = _mm256_mul_pd(u, e);
            acc0v = _mm256_add_pd(acc0v, e);
            acc1v = _mm256_add_pd(acc1v, ue);
            _mm256_storeu_pd(w0 + j,
                             _mm256_add_pd(_mm256_loadu_pd(w0 + j), e));
            _mm256_storeu_pd(w1 + j,
                             _mm256_sub_pd(_mm256_loadu_pd(w1 + j), ue));
        }
        double acc0 = hsum(acc0v);
        double acc1 = hsum(acc1v);
        for (; j < end; ++j) {
            const double u = (xk - xs[j]) * inv_bw;
            const double hu2 = 0.5 * u * u;
            if (hu2 > 32.0) {
                continue;
            }
            const double e = fast_exp_neg(-hu2);
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
    const __m256d vlin = _mm256_set1_pd(c_lin);
    const __m256d vconst = _mm256_set1_pd(c_const);
    const __m256d vcurv = _mm256_set1_pd(c_curv);
    const __m256d vnoise = _mm256_set1_pd(c_noise);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xi = _mm256_loadu_pd(x + i);
        const __m256d d = _mm256_loadu_pd(db + i);
        const __m256d curv =
            _mm256_div_pd(xi, _mm256_fmadd_pd(xi, xi, one));
        __m256d t = _mm256_fmadd_pd(vlin, xi, vconst);
        t = _mm256_fmadd_pd(vcurv, curv, t);
        t = _mm256_fmadd_pd(vnoise, d, t);
        _mm256_storeu_pd(x + i, _mm256_add_pd(xi, t));
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double curv = xi / (1.0 + xi * xi);
        x[i] = xi + c_lin * xi + c_const + c_curv * curv + c_noise * db[i];
    }
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        s += x[i];
    }
    return s;
}

double sum_sq_dev(const double* x, std::size_t n, double center) {
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - center;
        s += d * d;
    }
    return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void max_abs_dev_update(double* m, const double* x, std::size_t n,
                        double center) {
    const __m256d c = _mm256_set1_pd(center);
    const __m256d abs_mask =
        _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_and_pd(
            abs_mask, _mm256_sub_pd(_mm256_loadu_pd(x + i), c));
        _mm256_storeu_pd(m + i, _mm256_max_pd(_mm256_loadu_pd(m + i), d));
    }
    for (; i < n; ++i) {
        const double d = std::fabs(x[i] - center);
        if (d > m[i]) {
            m[i] = d;
        }
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                              acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

}  // namespace avx2

const Ops* avx2_ops() {
    static const Ops table{
        avx2::kde_sums,       avx2::kde_pair_sweep,
        avx2::mf_step,        avx2::sum,
        avx2::sum_sq_dev,     avx2::sum_sq_diff,
        avx2::max_abs_dev_update,
        avx2::dot,            "avx2",
    };
    return &table;
}

}  // namespace mvfbm::simd

#else  // non-x86 build: no AVX2 table

namespace mvfbm::simd {
const Ops* avx2_ops() { return nullptr; }
}  // namespace mvfbm::simd

#endif
