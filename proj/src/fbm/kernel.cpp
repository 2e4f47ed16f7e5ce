#include "mvfbm/fbm/kernel.hpp"

#include <cmath>

#include "mvfbm/errors.hpp"
#include "mvfbm/quad.hpp"

namespace mvfbm::fbm {

namespace {

void require_nonnegative_times(double s, double t) {
    if (s < 0.0 || t < 0.0 || !std::isfinite(s) || !std::isfinite(t)) {
        throw ConfigError("fbm: times must be finite and nonnegative");
    }
}

}  // namespace

double fbm_covariance(HurstIndex h, double s, double t) {
    require_nonnegative_times(s, t);
    const double two_h = 2.0 * h.value();
    return 0.5 * (std::pow(t, two_h) + std::pow(s, two_h) -
                  std::pow(std::fabs(t - s), two_h));
}

double kernel_constant(HurstIndex h) {
    if (h.is_brownian()) {
        return 1.0;
    }
    const double hv = h.value();
    return std::sqrt(hv * (2.0 * hv - 1.0) /
                     std::beta(2.0 - 2.0 * hv, hv - 0.5));
}

double cm_weight(HurstIndex h) {
    const double hv = h.value();
    return hv * (2.0 * hv - 1.0);
}

double kernel_K(HurstIndex h, double t, double s) {
    if (!(s > 0.0) || s > t) {
        throw ConfigError("kernel_K: need 0 < s <= t");
    }
    if (h.is_brownian()) {
        return 1.0;
    }
    if (s == t) {
        return 0.0;
    }
    const double hv = h.value();
    const double nu = 1.0 / (hv - 0.5);
    const double big_w = std::pow(t - s, hv - 0.5);
    // Substituted integrand (s + w^nu)^{H - 1/2}; the (u - s)^{H - 3/2}
    // singularity is exactly absorbed by the change of variable.  The
    // integrand is nearly constant below the crossover w* = s^{H - 1/2}
    // and nearly linear above it, with curvature concentrated at w*, so
    // panels are graded toward the crossover from both sides.
    const auto g = [&](double w) { return std::pow(s + std::pow(w, nu), hv - 0.5); };
    const double w_star = std::pow(s, hv - 0.5);
    double j;
    if (w_star < big_w) {
        j = quad::gl32_graded(g, 0.0, w_star, 6, 2.0,
                              quad::GradeTowards::kUpper) +
            quad::gl32_graded(g, w_star, big_w, 8, 2.0,
                              quad::GradeTowards::kLower);
    } else {
        j = quad::gl32_graded(g, 0.0, big_w, 8, 2.0,
                              quad::GradeTowards::kUpper);
    }
    return kernel_constant(h) * std::pow(s, 0.5 - hv) * j * nu;
}

double kernel_dK_dt(HurstIndex h, double t, double s) {
    if (!(s > 0.0) || !(s < t)) {
        throw ConfigError("kernel_dK_dt: need 0 < s < t");
    }
    if (h.is_brownian()) {
        return 0.0;
    }
    const double hv = h.value();
    return kernel_constant(h) * std::pow(t - s, hv - 1.5) *
           std::pow(s / t, 0.5 - hv);
}

double integrate_cell_against_dk(HurstIndex h, double r, double a, double b,
                                 const std::function<double(double)>& f) {
    if (!(r > 0.0) || a < r || !(b > a)) {
        throw ConfigError("integrate_cell_against_dk: need 0 < r <= a < b");
    }
    if (h.is_brownian()) {
        return 0.0;
    }
    const double hv = h.value();
    const double nu = 1.0 / (hv - 0.5);
    const double lo = std::pow(a - r, hv - 0.5);
    const double hi = std::pow(b - r, hv - 0.5);
    const auto g = [&](double w) {
        const double s = r + std::pow(w, nu);
        return f(s) * std::pow(r / s, 0.5 - hv);
    };
    return kernel_constant(h) * nu * quad::gl32(g, lo, hi);
}

double k_star(HurstIndex h, const TimeGrid& grid,
              const std::vector<double>& phi_cells, double s) {
    if (phi_cells.size() != grid.n_steps()) {
        throw ConfigError("k_star: phi must have one value per grid cell");
    }
    if (!(s > 0.0) || s >= grid.t_end()) {
        throw ConfigError("k_star: need 0 < s < t_end");
    }
    if (h.is_brownian()) {
        // The adjoint transform is the identity in the Brownian limit.
        return phi_cells[grid.cell_index(s)];
    }
    const auto one = [](double) { return 1.0; };
    double acc = 0.0;
    for (std::size_t j = grid.cell_index(s); j < grid.n_steps(); ++j) {
        const double lo = std::max(s, grid.t(j));
        const double hi = grid.t(j + 1);
        if (!(hi > lo)) {
            continue;
        }
        acc += phi_cells[j] * integrate_cell_against_dk(h, s, lo, hi, one);
    }
    return acc;
}

double cm_inner_cells(HurstIndex h, const std::vector<double>& edges,
                      const std::vector<double>& phi_cells,
                      const std::vector<double>& psi_cells) {
    const std::size_t n = phi_cells.size();
    if (psi_cells.size() != n || edges.size() != n + 1 || n == 0) {
        throw ConfigError("cm_inner: cell arrays must match the edge array");
    }
    const double two_h = 2.0 * h.value();

    bool uniform = true;
    const double dt0 = edges[1] - edges[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (std::fabs((edges[i + 1] - edges[i]) - dt0) > 1e-12 * dt0) {
            uniform = false;
            break;
        }
    }

    if (uniform) {
        // alpha_H * iint over cells i, j depends only on k = |i - j|:
        //   c_k = dt^{2H} ((k+1)^{2H} + |k-1|^{2H} - 2 k^{2H}) / 2.
        std::vector<double> powers(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            powers[k] = std::pow(static_cast<double>(k), two_h);
        }
        const double scale = 0.5 * std::pow(dt0, two_h);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double ck =
                scale * (powers[k + 1] + (k == 0 ? powers[1] : powers[k - 1]) -
                         2.0 * powers[k]);
            double diag = 0.0;
            if (k == 0) {
                for (std::size_t i = 0; i < n; ++i) {
                    diag += phi_cells[i] * psi_cells[i];
                }
            } else {
                for (std::size_t i = 0; i + k < n; ++i) {
                    diag += phi_cells[i] * psi_cells[i + k] +
                            phi_cells[i + k] * psi_cells[i];
                }
            }
            acc += ck * diag;
        }
        return acc;
    }

    // General cells: alpha_H * iint_{[a,b] x [c,d]} |u-v|^{2H-2} =
    //   (|b-c|^{2H} + |a-d|^{2H} - |a-c|^{2H} - |b-d|^{2H}) / 2.
    const auto g = [two_h](double x) { return std::pow(std::fabs(x), two_h); };
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = edges[i];
        const double b = edges[i + 1];
        for (std::size_t j = 0; j < n; ++j) {
            const double c = edges[j];
            const double d = edges[j + 1];
            const double w =
                0.5 * (g(b - c) + g(a - d) - g(a - c) - g(b - d));
            acc += phi_cells[i] * psi_cells[j] * w;
        }
    }
    return acc;
}

double cm_inner(HurstIndex h, const TimeGrid& grid,
                const std::vector<double>& phi_cells,
                const std::vector<double>& psi_cells) {
    return cm_inner_cells(h, grid.times(), phi_cells, psi_cells);
}

}  // namespace mvfbm::fbm
