#include "mvfbm/measure.hpp"

#include <algorithm>
#include <cmath>

#include "mvfbm/errors.hpp"
#include "mvfbm/simd/ops.hpp"

namespace mvfbm {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty()) {
        throw ConfigError("EmpiricalMeasure: need at least one atom");
    }
    for (double x : atoms_) {
        if (!std::isfinite(x)) {
            throw ConfigError("EmpiricalMeasure: atoms must be finite");
        }
    }
}

EmpiricalMeasure EmpiricalMeasure::degenerate(double x, std::size_t n) {
    if (n == 0) {
        throw ConfigError("EmpiricalMeasure: need at least one atom");
    }
    return EmpiricalMeasure(std::vector<double>(n, x));
}

double EmpiricalMeasure::mean() const {
    return simd::ops().sum(atoms_.data(), atoms_.size()) /
           static_cast<double>(atoms_.size());
}

double EmpiricalMeasure::variance() const {
    const double m = mean();
    const double ss = simd::ops().sum_sq_dev(atoms_.data(), atoms_.size(), m);
    return ss / static_cast<double>(atoms_.size());
}

double EmpiricalMeasure::stdev() const { return std::sqrt(variance()); }

double EmpiricalMeasure::moment(double p) const {
    if (!(p >= 1.0)) {
        throw ConfigError("moment: order must satisfy p >= 1");
    }
    const std::size_t n = atoms_.size();
    double acc = 0.0;
    if (p == 1.0) {
        for (double x : atoms_) {
            acc += std::fabs(x);
        }
    } else if (p == 2.0) {
        acc = simd::ops().sum_sq_dev(atoms_.data(), n, 0.0);
    } else {
        for (double x : atoms_) {
            acc += std::pow(std::fabs(x), p);
        }
    }
    return acc / static_cast<double>(n);
}

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   double theta) {
    if (!(theta >= 1.0)) {
        throw ConfigError("wasserstein: order must satisfy theta >= 1");
    }
    if (mu.size() != nu.size()) {
        throw ConfigError(
            "wasserstein: measures must have equal atom counts; resample "
            "before comparing");
    }
    std::vector<double> xs = mu.atoms();
    std::vector<double> ys = nu.atoms();
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const std::size_t n = xs.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    if (theta == 2.0) {
        return std::sqrt(simd::ops().sum_sq_diff(xs.data(), ys.data(), n) *
                         inv_n);
    }
    double acc = 0.0;
    if (theta == 1.0) {
        for (std::size_t i = 0; i < n; ++i) {
            acc += std::fabs(xs[i] - ys[i]);
        }
        return acc * inv_n;
    }
    for (std::size_t i = 0; i < n; ++i) {
        acc += std::pow(std::fabs(xs[i] - ys[i]), theta);
    }
    return std::pow(acc * inv_n, 1.0 / theta);
}

}  // namespace mvfbm
