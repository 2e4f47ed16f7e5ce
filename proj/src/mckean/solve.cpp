#include "mvfbm/mckean/solve.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/sampler.hpp"
#include "mvfbm/rng.hpp"
#include "mvfbm/simd/ops.hpp"

namespace mvfbm::mckean {

double OdePath::interpolate(double t) const {
    const std::size_t c = grid.cell_index(t);
    if (c >= grid.n_steps()) {
        return values.back();
    }
    const double w = (t - grid.t(c)) / grid.dt(c);
    return (1.0 - w) * values[c] + w * values[c + 1];
}

OdePath solve_ode(const CoefficientModel& model, const TimeGrid& grid,
                  std::size_t measure_atoms) {
    if (measure_atoms == 0) {
        throw ConfigError("solve_ode: measure_atoms must be positive");
    }
    OdePath path{grid, std::vector<double>(grid.n_steps() + 1, 0.0)};
    path.values[0] = model.x0;
    const auto rhs = [&](double t, double x) {
        return model.drift(t, x,
                           EmpiricalMeasure::degenerate(x, measure_atoms));
    };
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        const double t = grid.t(k);
        const double dt = grid.dt(k);
        const double x = path.values[k];
        const double k1 = rhs(t, x);
        const double k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
        const double k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
        const double k4 = rhs(t + dt, x + dt * k3);
        const double next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(next)) {
            std::ostringstream msg;
            msg << "solve_ode: non-finite state at step " << k;
            throw NumericalError(msg.str());
        }
        path.values[k + 1] = next;
    }
    return path;
}

ParticleEnsemble solve_particles(const CoefficientModel& model,
                                 const TimeGrid& grid,
                                 std::size_t n_particles, double epsilon,
                                 fbm::HurstIndex h, std::uint64_t seed) {
    if (n_particles < 2) {
        throw ConfigError("solve_particles: need at least two particles");
    }
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw ConfigError("solve_particles: epsilon must lie in (0, 1]");
    }
    const std::size_t n = grid.n_steps();
    const double noise_scale = std::pow(epsilon, h.value());

    ParticleEnsemble ens{grid,
                         h,
                         epsilon,
                         seed,
                         model.id,
                         n_particles,
                         {},
                         {},
                         {},
                         {},
                         {}};
    ens.states.assign(n + 1, std::vector<double>(n_particles, model.x0));
    ens.driving.assign(n, std::vector<double>(n_particles, 0.0));
    ens.mean_history.resize(n + 1);
    ens.stdev_history.resize(n + 1);
    ens.sigma_history.resize(n + 1);

    // Independent fBm driving paths, one stream per particle.  The stream
    // id depends only on the particle index so that every epsilon reuses
    // the same noise (common random numbers across the epsilon sweep).
    {
        const fbm::FbmSampler sampler(h, grid);
        for (std::size_t i = 0; i < n_particles; ++i) {
            const auto db = sampler.sample_increments(
                seed, derive_stream(stream_purpose::kParticleDriving, i));
            for (std::size_t k = 0; k < n; ++k) {
                ens.driving[k][i] = db[k];
            }
        }
    }

    const auto& ops = simd::ops();
    const double inv_np = 1.0 / static_cast<double>(n_particles);
    for (std::size_t k = 0; k <= n; ++k) {
        std::vector<double>& x = ens.states[k];
        const double mean = ops.sum(x.data(), n_particles) * inv_np;
        const double stdev = std::sqrt(
            ops.sum_sq_dev(x.data(), n_particles, mean) * inv_np);
        ens.mean_history[k] = mean;
        ens.stdev_history[k] = stdev;
        const EmpiricalMeasure mu(x);
        const double sigma = model.diffusion(grid.t(k), mu);
        ens.sigma_history[k] = sigma;
        if (k == n) {
            break;
        }

        const double t = grid.t(k);
        const double dt = grid.dt(k);
        std::vector<double>& next = ens.states[k + 1];
        next = x;
        if (model.has_fast_path) {
            const MfOuParams& p = model.ou;
            ops.mf_step(next.data(), ens.driving[k].data(), n_particles,
                        -p.alpha * dt, p.beta * mean * dt, p.kappa * dt,
                        noise_scale * sigma);
        } else {
            for (std::size_t i = 0; i < n_particles; ++i) {
                next[i] += model.drift(t, x[i], mu) * dt +
                           noise_scale * sigma * ens.driving[k][i];
            }
        }
        for (std::size_t i = 0; i < n_particles; ++i) {
            if (!std::isfinite(next[i])) {
                std::ostringstream msg;
                msg << "solve_particles: non-finite state for particle " << i
                    << " at step " << k + 1;
                throw NumericalError(msg.str());
            }
        }
    }
    return ens;
}

std::vector<double> fluctuation(const ParticleEnsemble& ensemble,
                                const OdePath& ode, double t) {
    const std::size_t k = ensemble.grid.index_of(t);
    const double inv_scale =
        1.0 / std::pow(ensemble.epsilon, ensemble.h.value());
    const double x_t = ode.values.at(k);
    std::vector<double> out(ensemble.n_particles);
    for (std::size_t i = 0; i < ensemble.n_particles; ++i) {
        out[i] = (ensemble.states[k][i] - x_t) * inv_scale;
    }
    return out;
}

void write_trajectories_csv(const ParticleEnsemble& ensemble,
                            const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) {
        throw ConfigError("write_trajectories_csv: cannot open " + path);
    }
    std::fputs("t,particle_id,value\n", f);
    for (std::size_t k = 0; k < ensemble.states.size(); ++k) {
        for (std::size_t i = 0; i < ensemble.n_particles; ++i) {
            std::fprintf(f, "%.17g,%zu,%.17g\n", ensemble.grid.t(k), i,
                         ensemble.states[k][i]);
        }
    }
    std::fclose(f);
}

}  // namespace mvfbm::mckean
