#include "mvfbm/mckean/limit.hpp"

#include <cmath>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/kernel.hpp"
#include "mvfbm/fbm/sampler.hpp"
#include "mvfbm/rng.hpp"

namespace mvfbm::mckean {

LimitLaw limit_law(const CoefficientModel& model, const OdePath& ode, double t,
                   fbm::HurstIndex h) {
    const TimeGrid& grid = ode.grid;
    const std::size_t n_t = grid.index_of(t);
    LimitLaw law;
    law.t = t;
    law.mean = 0.0;
    if (n_t == 0) {
        law.variance = 0.0;
        return law;
    }

    // Midpoint tabulation of the decay a(s) and diffusion sigma(s, delta_x)
    // over the cells of [0, t]; midpoint cumulative sums give int_s^t a.
    law.decay.resize(n_t);
    law.integrand.resize(n_t);
    std::vector<double> sigma_mid(n_t);
    for (std::size_t j = 0; j < n_t; ++j) {
        const double s = 0.5 * (grid.t(j) + grid.t(j + 1));
        const double x = ode.interpolate(s);
        const EmpiricalMeasure delta = EmpiricalMeasure::degenerate(x);
        law.decay[j] = model.grad_b(s, x, delta);
        sigma_mid[j] = model.diffusion(s, delta);
    }
    // tail[j] = int_{t_j}^{t} a(r) dr by the midpoint rule.
    std::vector<double> tail(n_t + 1, 0.0);
    for (std::size_t j = n_t; j-- > 0;) {
        tail[j] = tail[j + 1] + law.decay[j] * grid.dt(j);
    }
    for (std::size_t j = 0; j < n_t; ++j) {
        const double int_mid_to_t = tail[j] - 0.5 * law.decay[j] * grid.dt(j);
        law.integrand[j] = std::exp(int_mid_to_t) * sigma_mid[j];
    }

    const std::vector<double> edges(grid.times().begin(),
                                    grid.times().begin() + n_t + 1);
    law.variance = fbm::cm_inner_cells(h, edges, law.integrand, law.integrand);
    return law;
}

std::vector<double> simulate_Z(const CoefficientModel& model,
                               const OdePath& ode, const TimeGrid& grid,
                               fbm::HurstIndex h, std::uint64_t seed,
                               std::size_t n_samples) {
    const std::size_t n = grid.n_steps();
    // Left-endpoint tabulations along the deterministic path.
    std::vector<double> a(n), lam(n), sig(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double tk = grid.t(k);
        const double x = ode.values.at(k);
        const EmpiricalMeasure delta = EmpiricalMeasure::degenerate(x);
        a[k] = model.grad_b(tk, x, delta);
        lam[k] = model.mf_sensitivity(tk);
        sig[k] = model.diffusion(tk, delta);
    }

    // The deterministic mean channel: E[Z] solves dE = (a + lambda) E dt
    // from zero, so it stays zero; it is carried explicitly so the sample
    // scheme matches the equation term by term.
    std::vector<double> mean_z(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        mean_z[k + 1] = mean_z[k] + (a[k] + lam[k]) * mean_z[k] * grid.dt(k);
    }

    const fbm::FbmSampler sampler(h, grid);
    std::vector<double> out(n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
        const auto db = sampler.sample_increments(
            seed, derive_stream(stream_purpose::kZSample, j));
        double z = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            z += (a[k] * z + lam[k] * mean_z[k]) * grid.dt(k) +
                 sig[k] * db[k];
        }
        if (!std::isfinite(z)) {
            throw NumericalError("simulate_Z: non-finite sample");
        }
        out[j] = z;
    }
    return out;
}

std::vector<double> simulate_U(const CoefficientModel& model,
                               const ParticleEnsemble& ensemble,
                               const OdePath& ode, double t) {
    const TimeGrid& grid = ensemble.grid;
    const std::size_t n_t = grid.index_of(t);
    const std::size_t n_particles = ensemble.n_particles;
    const double inv_scale =
        1.0 / std::pow(ensemble.epsilon, ensemble.h.value());

    std::vector<double> u(n_particles, 0.0);
    for (std::size_t k = 0; k < n_t; ++k) {
        const double tk = grid.t(k);
        const double dt = grid.dt(k);
        const double x = ode.values.at(k);
        const EmpiricalMeasure law_x = ensemble.measure_at(k);
        const EmpiricalMeasure delta = EmpiricalMeasure::degenerate(x);

        // All drift coefficients are shared across particles: the state
        // argument is the deterministic path, only the noise is per-particle.
        const double grad = model.grad_b(tk, x, law_x);
        const double law_gap = inv_scale * (model.drift(tk, x, law_x) -
                                            model.drift(tk, x, delta));
        const double sig = model.diffusion(tk, delta);

        const std::vector<double>& db = ensemble.driving[k];
        for (std::size_t i = 0; i < n_particles; ++i) {
            u[i] += (grad * u[i] + law_gap) * dt + sig * db[i];
        }
    }
    for (double v : u) {
        if (!std::isfinite(v)) {
            throw NumericalError("simulate_U: non-finite sample");
        }
    }
    return u;
}

}  // namespace mvfbm::mckean
