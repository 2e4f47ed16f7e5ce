// Coefficient models for the distribution-dependent SDE
//   dX = b(t, X, mu) dt + eps^H sigma(t, mu) dB^H
// with drift/diffusion Lipschitz in state and measure (Wasserstein) and
// diffusion free of the state argument.  Models carry closed-form gradients
// and the mean-field sensitivity lambda(t) used by the fluctuation limit.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvfbm/measure.hpp"

namespace mvfbm::mckean {

// Parameters of the mean-field Ornstein-Uhlenbeck family
//   b(t, x, mu) = -alpha x + beta mean(mu) + kappa x/(1 + x^2)
//   sigma(t, mu) = sigma0 + gamma mean(mu) + gamma_w stdev(mu).
// kappa and gamma_w default to zero, which restores the plain linear
// mean-field OU model.  kappa bends the drift so the ensemble mean departs
// from the deterministic path at first order in the noise; gamma_w couples
// the diffusion to the ensemble width so the fluctuation variance departs
// from the limit variance at first order.  Both keep (A1)-style Lipschitz
// bounds: |d/dx x/(1+x^2)| <= 1 and stdev is 1-Lipschitz in W_2.
struct MfOuParams {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.0;
    double sigma0 = 1.0;
    double kappa = 0.0;
    double gamma_w = 0.0;
    double x0 = 1.0;
};

// The bounded drift curvature x / (1 + x^2) of the mean-field OU family and
// its first two derivatives, shared by the factory and the fast evaluation
// paths elsewhere.
inline double ou_curvature(double x) { return x / (1.0 + x * x); }
inline double ou_curvature_d1(double x) {
    const double d = 1.0 + x * x;
    return (1.0 - x * x) / (d * d);
}
inline double ou_curvature_d2(double x) {
    const double d = 1.0 + x * x;
    return 2.0 * x * (x * x - 3.0) / (d * d * d);
}

struct CoefficientModel {
    std::string id;
    double x0 = 0.0;
    double theta = 2.0;             // Wasserstein order of the model's measure space
    double lipschitz_budget = 1.0;  // declared K(T) for runtime sanity probes

    std::function<double(double t, double x, const EmpiricalMeasure& mu)> drift;
    std::function<double(double t, const EmpiricalMeasure& mu)> diffusion;
    std::function<double(double t, double x, const EmpiricalMeasure& mu)> grad_b;
    std::function<double(double t, double x, const EmpiricalMeasure& mu)> grad2_b;
    // Deterministic mean-field sensitivity lambda(t): the measure derivative
    // of b along the deterministic path, supplied in closed form.
    std::function<double(double t)> mf_sensitivity;

    // True when sigma ignores both t and mu entirely (enables closed-form
    // branches in the nondegeneracy functional).
    bool constant_diffusion = false;
    // True when grad_b ignores x and mu (conditional expectations of the
    // first Malliavin derivative collapse to a single evaluation).
    bool state_independent_grad = false;

    // Coefficients for the vectorized particle stepper; only meaningful
    // when has_fast_path is set (the generic path uses the std::functions).
    bool has_fast_path = false;
    MfOuParams ou;

    // Findings of the construction-time Lipschitz/positivity probe.
    // Non-empty means the declared budget failed on sampled points; solvers
    // proceed but surface these on the warning channel.
    std::vector<std::string> probe_warnings;
};

// b = 0, constant sigma, x0 = 0: the solution is exactly
// eps^H sigma B^H.  The default is the unit-noise law; the harness uses
// other constants to build null controls at a prescribed limit variance.
CoefficientModel make_pure_noise(double sigma = 1.0);

// The mean-field OU family described at MfOuParams.
CoefficientModel make_mf_ou(const MfOuParams& params);

}  // namespace mvfbm::mckean
