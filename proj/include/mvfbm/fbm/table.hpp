// Precomputed lower-triangular table of Volterra kernel values K(t_i, t_j)
// on a uniform grid, with a small binary cache format so expensive kernel
// evaluations can be reused across runs.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/time_grid.hpp"

namespace mvfbm::fbm {

class KernelTable {
public:
    // Evaluates K(t_i, t_j) for 0 <= j <= i <= n on the uniform grid with
    // t_k = k T / n.  The j = 0 column and the diagonal are stored as zero
    // (the kernel is singular at s = 0 and vanishes at s = t).
    static KernelTable build(HurstIndex h, double t_end, std::size_t n_steps);

    static KernelTable load(const std::string& path);
    void save(const std::string& path) const;

    double hurst() const { return h_; }
    double t_end() const { return t_end_; }
    std::size_t n_steps() const { return n_; }

    // K(t_i, t_j); requires j <= i.
    double at(std::size_t i, std::size_t j) const;

    // Relative error of the row identity int_0^{t_i} K(t_i, s)^2 ds =
    // t_i^{2H}, approximated with the interior grid values of row i.  The
    // quadrature is first order, so this is a coarse consistency check.
    double row_identity_error(std::size_t i) const;

private:
    KernelTable() = default;

    double h_ = 0.0;
    double t_end_ = 0.0;
    std::size_t n_ = 0;
    // Packed rows i = 0..n, row i holding entries j = 0..i.
    std::vector<double> data_;

    std::size_t offset(std::size_t i, std::size_t j) const {
        return i * (i + 1) / 2 + j;
    }
};

}  // namespace mvfbm::fbm
