#pragma once
// Discretization grid 0 = t_0 < t_1 < ... < t_n shared by solvers, kernel
// tables, and quadrature. Uniform grids unlock the fast paths (circulant
// noise generation, Toeplitz inner products); non-uniform grids are accepted
// where the math does not require stationarity.

#include <cstddef>
#include <vector>

namespace mvfbm {

class TimeGrid {
public:
    // Uniform grid on [0, t_end] with n_steps cells.
    static TimeGrid uniform(double t_end, std::size_t n_steps);

    // General strictly-increasing grid starting at 0.
    explicit TimeGrid(std::vector<double> times);

    std::size_t n_steps() const { return times_.size() - 1; }
    double t(std::size_t i) const { return times_[i]; }
    double dt(std::size_t i) const { return times_[i + 1] - times_[i]; }
    double t_end() const { return times_.back(); }
    bool is_uniform() const { return uniform_; }
    const std::vector<double>& times() const { return times_; }

    // Index k with |t_k - t| <= tol; throws ConfigError if t is not a grid
    // point (callers that need cell lookup use cell_index instead).
    std::size_t index_of(double t, double tol = 1e-12) const;

    // Largest k with t_k <= t (t in [0, t_end]).
    std::size_t cell_index(double t) const;

private:
    std::vector<double> times_;
    bool uniform_ = false;
};

}  // namespace mvfbm
