#include "mvfbm/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mvfbm/errors.hpp"
#include "mvfbm/simd/ops.hpp"

namespace mvfbm::fisher {

namespace {

constexpr double kRootTwoPi = 2.5066282746310002;
constexpr double kTruncation = 8.0;  // matches the kernel's |u| cutoff
constexpr double kFloorRatio = 1e-4;
constexpr double kMaxClipped = 0.2;

void require_samples(const std::vector<double>& v, const char* who) {
    if (v.size() < 100) {
        throw ConfigError(std::string(who) +
                          ": need at least 100 samples for estimation");
    }
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw ConfigError(std::string(who) + ": non-finite sample value");
        }
    }
}

std::vector<double> sorted_copy(const std::vector<double>& v) {
    std::vector<double> out = v;
    std::sort(out.begin(), out.end());
    return out;
}

// Kernel sums over the sorted points within truncation range of x, for a
// nondecreasing sequence of evaluation points.
struct WindowScan {
    const std::vector<double>& xs;
    double radius;
    std::size_t lo = 0;
    std::size_t hi = 0;

    simd::KdeSums at(double x, double inv_bw) {
        while (lo < xs.size() && xs[lo] < x - radius) {
            ++lo;
        }
        if (hi < lo) {
            hi = lo;
        }
        while (hi < xs.size() && xs[hi] <= x + radius) {
            ++hi;
        }
        return simd::ops().kde_sums(xs.data() + lo, hi - lo, x, inv_bw);
    }
};

}  // namespace

double silverman_bandwidth(const std::vector<double>& values) {
    require_samples(values, "silverman_bandwidth");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double x : values) {
        mean += x;
    }
    mean /= n;
    double ss = 0.0;
    for (double x : values) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / n);
    if (sd == 0.0) {
        throw ConfigError("silverman_bandwidth: degenerate sample set");
    }
    return 1.06 * sd * std::pow(n, -0.2);
}

double score_kde(const SampleSet& samples, double x, double bandwidth) {
    require_samples(samples.values, "score_kde");
    if (!(bandwidth > 0.0)) {
        throw ConfigError("score_kde: bandwidth must be positive");
    }
    const auto xs = sorted_copy(samples.values);
    const std::size_t n = xs.size();
    const double inv_bw = 1.0 / bandwidth;

    // Sum mirror pairs from the outside in so that a sample set symmetric
    // around x cancels term by term, keeping the score exactly odd there.
    double w0 = 0.0;
    double w1 = 0.0;
    std::size_t i = 0;
    std::size_t j = n - 1;
    for (; i < j; ++i, --j) {
        double e_lo = 0.0, ue_lo = 0.0, e_hi = 0.0, ue_hi = 0.0;
        const double u_lo = (x - xs[i]) * inv_bw;
        if (0.5 * u_lo * u_lo <= 32.0) {
            e_lo = simd::fast_exp_neg(-0.5 * u_lo * u_lo);
            ue_lo = u_lo * e_lo;
        }
        const double u_hi = (x - xs[j]) * inv_bw;
        if (0.5 * u_hi * u_hi <= 32.0) {
            e_hi = simd::fast_exp_neg(-0.5 * u_hi * u_hi);
            ue_hi = u_hi * e_hi;
        }
        w0 += e_lo + e_hi;
        w1 += ue_lo + ue_hi;
    }
    if (i == j) {
        const double u = (x - xs[i]) * inv_bw;
        if (0.5 * u * u <= 32.0) {
            const double e = simd::fast_exp_neg(-0.5 * u * u);
            w0 += e;
            w1 += u * e;
        }
    }

    // Floor gate against the density peak, located on a coarse quantile
    // grid (adequate for a 10^{-4} relative threshold).
    const double radius = kTruncation * bandwidth;
    WindowScan scan{xs, radius};
    double max_w0 = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, n / 1024);
    for (std::size_t k = 0; k < n; k += stride) {
        max_w0 = std::max(max_w0, scan.at(xs[k], inv_bw).w0);
    }
    if (w0 < kFloorRatio * max_w0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return -w1 / (w0 * bandwidth);
}

FisherEstimate fisher_distance(const SampleSet& samples, double mu,
                               double sigma2, double bandwidth) {
    require_samples(samples.values, "fisher_distance");
    if (!(sigma2 > 0.0)) {
        throw ConfigError("fisher_distance: target variance must be positive");
    }
    const auto xs = sorted_copy(samples.values);
    const std::size_t n = xs.size();
    const double bw =
        bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples.values);
    const double inv_bw = 1.0 / bw;
    const double radius = kTruncation * bw;

    // Kernel sums at every sample point in one symmetric sweep: each
    // unordered pair is visited once, since phi(u) is even and u*phi(u)
    // is odd under swapping the two points.  Self terms seed the
    // accumulators (phi(0) = 1).
    std::vector<double> w0(n, 1.0), w1(n, 0.0);
    std::vector<std::size_t> win(n);
    std::size_t h = 0;
    for (std::size_t k = 0; k < n; ++k) {
        while (h < n && xs[h] <= xs[k] + radius) {
            ++h;
        }
        win[k] = h;
    }
    simd::ops().kde_pair_sweep(xs.data(), n, win.data(), inv_bw, w0.data(),
                               w1.data());
    double max_w0 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        max_w0 = std::max(max_w0, w0[k]);
    }

    const double floor = kFloorRatio * max_w0;
    double acc = 0.0;
    std::size_t kept = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (w0[k] < floor) {
            continue;
        }
        const double score = -w1[k] / (w0[k] * bw);
        const double term = score + (xs[k] - mu) / sigma2;
        acc += term * term;
        ++kept;
    }

    FisherEstimate est;
    est.bandwidth = bw;
    est.n = n;
    est.clipped_fraction =
        static_cast<double>(n - kept) / static_cast<double>(n);
    est.value = kept > 0 ? acc / static_cast<double>(kept) : 0.0;
    est.reliable = est.clipped_fraction <= kMaxClipped;
    return est;
}

double gaussian_fisher_oracle(double mu1, double sigma1_sq, double mu2,
                              double sigma2_sq) {
    if (!(sigma1_sq > 0.0) || !(sigma2_sq > 0.0)) {
        throw ConfigError("gaussian_fisher_oracle: variances must be positive");
    }
    const double dmu = mu1 - mu2;
    const double dprec = 1.0 / sigma2_sq - 1.0 / sigma1_sq;
    return dmu * dmu / (sigma2_sq * sigma2_sq) + sigma1_sq * dprec * dprec;
}

double tv_distance(const SampleSet& samples_a, const SampleSet& samples_b) {
    require_samples(samples_a.values, "tv_distance");
    require_samples(samples_b.values, "tv_distance");
    const auto xa = sorted_copy(samples_a.values);
    const auto xb = sorted_copy(samples_b.values);

    std::vector<double> pooled;
    pooled.reserve(xa.size() + xb.size());
    pooled.insert(pooled.end(), xa.begin(), xa.end());
    pooled.insert(pooled.end(), xb.begin(), xb.end());
    const double bw = silverman_bandwidth(pooled);
    const double inv_bw = 1.0 / bw;
    const double radius = kTruncation * bw;

    const double lo = std::min(xa.front(), xb.front()) - 3.0 * bw;
    const double hi = std::max(xa.back(), xb.back()) + 3.0 * bw;
    constexpr std::size_t kNodes = 2048;
    const double step = (hi - lo) / static_cast<double>(kNodes - 1);

    const double norm_a =
        1.0 / (static_cast<double>(xa.size()) * bw * kRootTwoPi);
    const double norm_b =
        1.0 / (static_cast<double>(xb.size()) * bw * kRootTwoPi);
    WindowScan scan_a{xa, radius};
    WindowScan scan_b{xb, radius};
    double integral = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < kNodes; ++k) {
        const double x = lo + step * static_cast<double>(k);
        const double pa = norm_a * scan_a.at(x, inv_bw).w0;
        const double pb = norm_b * scan_b.at(x, inv_bw).w0;
        const double gap = std::fabs(pa - pb);
        if (k > 0) {
            integral += 0.5 * (prev + gap) * step;
        }
        prev = gap;
    }
    return 0.5 * integral;
}

DecompositionDiagnostics decomposition_diagnostics(
    const SampleSet& samples, double mu, double sigma2, double theta,
    double second_derivative_moment) {
    require_samples(samples.values, "decomposition_diagnostics");
    const double n = static_cast<double>(samples.values.size());
    double mean = 0.0;
    for (double x : samples.values) {
        mean += x;
    }
    mean /= n;
    double ss = 0.0;
    for (double x : samples.values) {
        ss += (x - mean) * (x - mean);
    }
    const double var = ss / n;

    DecompositionDiagnostics d;
    d.mean_gap_sq = (mean - mu) * (mean - mu);
    d.var_gap_sq = (var - sigma2) * (var - sigma2);
    d.theta = theta;
    d.second_derivative_moment = second_derivative_moment;
    return d;
}

std::string fisher_json(const FisherEstimate& estimate) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"estimator\":\"fisher_kde\",\"value\":%.17g,"
                  "\"bandwidth\":%.17g,\"clipped_fraction\":%.17g,"
                  "\"n\":%zu}",
                  estimate.value, estimate.bandwidth,
                  estimate.clipped_fraction, estimate.n);
    return buf;
}

}  // namespace mvfbm::fisher
