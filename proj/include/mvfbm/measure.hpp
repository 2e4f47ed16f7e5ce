// Empirical probability measures on the real line: uniform-weight atom
// sets with their moments and the exact 1-D Wasserstein distance between
// equal-size measures (sorted-coupling formula).
#pragma once

#include <cstddef>
#include <vector>

namespace mvfbm {

class EmpiricalMeasure {
public:
    // Takes ownership of the atom positions; all must be finite.
    explicit EmpiricalMeasure(std::vector<double> atoms);

    // Point mass delta_x, optionally replicated over n identical atoms so
    // callers can meet equal-size requirements without resampling.
    static EmpiricalMeasure degenerate(double x, std::size_t n = 1);

    std::size_t size() const { return atoms_.size(); }
    const std::vector<double>& atoms() const { return atoms_; }

    double mean() const;
    // Population variance (1/N): the measure is a bona fide probability
    // measure, so no sample-size correction applies.
    double variance() const;
    double stdev() const;
    // (1/N) sum |x_i|^p for p >= 1.
    double moment(double p) const;

private:
    std::vector<double> atoms_;
};

// Exact L^theta Wasserstein distance between equal-size uniform empirical
// measures: ((1/N) sum |x_(i) - y_(i)|^theta)^{1/theta} over sorted atoms.
// Unequal sizes are an error; resampling is a caller decision.
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   double theta);

}  // namespace mvfbm
