#pragma once
// Fractional Brownian motion covariance and its Volterra kernel.
//
// For H in (1/2, 1) the process has covariance
//   R(s, t) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2
// and the Wiener-integral representation B^H_t = int_0^t K(t, s) dW_s with
//   K(t, s) = C_H s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du,
//   C_H = sqrt(H (2H-1) / Beta(2-2H, H-1/2)),
// so that int_0^t K(t, s)^2 ds = t^{2H}. Differentiating in t gives
//   dK/dt (t, s) = C_H (t-s)^{H-3/2} (s/t)^{1/2-H},
// the weight against which adjoint-type integrals int f(s) dK/ds (s, r) ds
// are taken. The (u-s)^{H-3/2} endpoint singularity is handled by the power
// substitution w = (u-s)^{H-1/2}, which absorbs it exactly; the transformed
// panels use the fixed 32-point Gauss-Legendre rule.
//
// The H = 1/2 sanity limit degenerates to K = 1_{s<t} and an L^2 pairing;
// the functions below implement that limit explicitly.

#include <cstddef>
#include <functional>
#include <vector>

#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/time_grid.hpp"

namespace mvfbm::fbm {

// Covariance R(s, t); requires s, t >= 0.
double fbm_covariance(HurstIndex h, double s, double t);

// Normalization C_H of the Volterra kernel (1 for the Brownian limit
// where the kernel is the plain indicator).
double kernel_constant(HurstIndex h);

// alpha_H = H (2H - 1), the constant in front of the |u-v|^{2H-2} kernel of
// the Cameron-Martin inner product.
double cm_weight(HurstIndex h);

// K(t, s) for 0 < s <= t (0 at s == t); throws on s <= 0 or s > t.
double kernel_K(HurstIndex h, double t, double s);

// dK/dt (t, s) for 0 < s < t.
double kernel_dK_dt(HurstIndex h, double t, double s);

// int_a^b f(s) * dK/ds (s, r) ds over one cell [a, b] with r <= a < b.
// When a == r the integrable endpoint singularity is removed by the power
// substitution; otherwise a plain Gauss-Legendre panel applies.
double integrate_cell_against_dk(HurstIndex h, double r, double a, double b,
                                 const std::function<double(double)>& f);

// Adjoint-kernel transform of a piecewise-constant function:
//   (K* phi)(s) = int_s^T phi(t) dK/dt (t, s) dt,
// phi given by per-cell values on `grid`. For phi = 1_{[0, t]} this equals
// K(t, s) 1_{s < t}.
double k_star(HurstIndex h, const TimeGrid& grid,
              const std::vector<double>& phi_cells, double s);

// Cameron-Martin inner product of piecewise-constant functions on the cells
// of `grid`:
//   <phi, psi> = alpha_H int int phi(u) psi(v) |u-v|^{2H-2} du dv,
// evaluated by the exact per-cell closed form (the |u-v|^{2H-2} rectangle
// integral is elementary); reduces to the L^2 pairing at H = 1/2.
double cm_inner(HurstIndex h, const TimeGrid& grid,
                const std::vector<double>& phi_cells,
                const std::vector<double>& psi_cells);

// Same inner product over an explicit cell-edge array (used on sub-grids).
double cm_inner_cells(HurstIndex h, const std::vector<double>& edges,
                      const std::vector<double>& phi_cells,
                      const std::vector<double>& psi_cells);

}  // namespace mvfbm::fbm
