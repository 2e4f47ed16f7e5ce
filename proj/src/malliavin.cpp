#include "mvfbm/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <utility>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/kernel.hpp"
#include "mvfbm/fbm/sampler.hpp"
#include "mvfbm/quad.hpp"
#include "mvfbm/rng.hpp"

namespace mvfbm::malliavin {

namespace {

using mckean::CoefficientModel;
using mckean::ParticleEnsemble;

// Exponent profile over the cells of [0, t_cap]: acell[k] is the piecewise
// constant grad_b on cell k and tail[k] = exp(int_{t_k}^{t_cap} a du).
struct ExpProfile {
    std::vector<double> acell;
    std::vector<double> tail;
};

ExpProfile profile_from_a(std::vector<double> acell, const TimeGrid& grid) {
    const std::size_t n_t = acell.size();
    ExpProfile p;
    p.tail.assign(n_t + 1, 1.0);
    double cum = 0.0;
    for (std::size_t k = n_t; k-- > 0;) {
        cum += acell[k] * grid.dt(k);
        p.tail[k] = std::exp(cum);
    }
    p.acell = std::move(acell);
    return p;
}

// Frozen measure history plus fast coefficient evaluation.  Models with the
// vectorized stepper are evaluated from their parameter block; generic
// models go through their std::functions against the stored measures.
struct Context {
    const CoefficientModel* model = nullptr;
    const ParticleEnsemble* ens = nullptr;
    std::size_t n_t = 0;
    bool fast = false;
    std::vector<EmpiricalMeasure> measures;

    double drift_at(std::size_t k, double x) const {
        if (fast) {
            const auto& p = model->ou;
            return -p.alpha * x + p.beta * ens->mean_history[k] +
                   p.kappa * mckean::ou_curvature(x);
        }
        return model->drift(ens->grid.t(k), x, measures[k]);
    }
    double grad_at(std::size_t k, double x) const {
        if (fast) {
            const auto& p = model->ou;
            return -p.alpha + p.kappa * mckean::ou_curvature_d1(x);
        }
        return model->grad_b(ens->grid.t(k), x, measures[k]);
    }
    double grad2_at(std::size_t k, double x) const {
        if (fast) {
            return model->ou.kappa * mckean::ou_curvature_d2(x);
        }
        return model->grad2_b(ens->grid.t(k), x, measures[k]);
    }
};

Context make_context(const CoefficientModel& model,
                     const ParticleEnsemble& ens, std::size_t n_t) {
    Context c;
    c.model = &model;
    c.ens = &ens;
    c.n_t = n_t;
    c.fast = model.has_fast_path;
    if (!c.fast) {
        c.measures.reserve(n_t);
        for (std::size_t k = 0; k < n_t; ++k) {
            c.measures.push_back(ens.measure_at(k));
        }
    }
    return c;
}

std::vector<double> own_a_cells(const Context& ctx, std::size_t particle) {
    std::vector<double> a(ctx.n_t);
    for (std::size_t k = 0; k < ctx.n_t; ++k) {
        a[k] = ctx.grad_at(k, ctx.ens->states[k][particle]);
    }
    return a;
}

// D~(r, t_cap) = int_r^{t_cap} sigma(s) dK/ds(s, r) exp(int_s^{t_cap} a) ds
// by cellwise quadrature; the cell touching r absorbs the (s-r)^{H-3/2}
// singularity through the kernel helper's power substitution.
double dtilde(fbm::HurstIndex h, const TimeGrid& grid,
              const std::vector<double>& sigma_hist, const ExpProfile& prof,
              std::size_t n_t, double r) {
    if (r >= grid.t(n_t)) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t k = grid.cell_index(r); k < n_t; ++k) {
        const double lo = std::max(r, grid.t(k));
        const double hi = grid.t(k + 1);
        const double sig = sigma_hist[k];
        const double tail = prof.tail[k + 1];
        const double a = prof.acell[k];
        const auto f = [sig, tail, a, hi](double s) {
            return sig * tail * std::exp(a * (hi - s));
        };
        total += fbm::integrate_cell_against_dk(h, r, lo, hi, f);
    }
    return total;
}

// One sweep of D~(r, t_k) for every grid index k <= n_t: with
// E(u) = exp(int_0^u a), the running integral
//   S_k = int_r^{t_k} sigma(s) dK/ds(s, r) / E(s) ds
// gains one cell per step and D~(r, t_k) = E(t_k) S_k.
std::vector<double> dtilde_sweep(fbm::HurstIndex h, const TimeGrid& grid,
                                 const std::vector<double>& sigma_hist,
                                 const std::vector<double>& acell,
                                 std::size_t n_t, double r) {
    std::vector<double> head(n_t + 1, 1.0);
    double cum = 0.0;
    for (std::size_t k = 0; k < n_t; ++k) {
        cum += acell[k] * grid.dt(k);
        head[k + 1] = std::exp(cum);
    }
    std::vector<double> out(n_t + 1, 0.0);
    double s_acc = 0.0;
    for (std::size_t k = 0; k < n_t; ++k) {
        const double hi = grid.t(k + 1);
        if (hi > r) {
            const double lo = std::max(r, grid.t(k));
            const double sig = sigma_hist[k];
            const double inv_head = 1.0 / head[k];
            const double a = acell[k];
            const double t_k = grid.t(k);
            const auto f = [sig, inv_head, a, t_k](double s) {
                return sig * inv_head * std::exp(-a * (s - t_k));
            };
            s_acc += fbm::integrate_cell_against_dk(h, r, lo, hi, f);
        }
        out[k + 1] = head[k + 1] * s_acc;
    }
    return out;
}

// int_0^t w(r) dr for integrands that blow up like r^{1-2H} at zero and
// have a (t-r)^{2H-1}-type kink at t.  The substitution v = r^{2-2H} makes
// the zero end finite (r^{1-2H} dr = const dv); graded panels then absorb
// the fractional corrections at both ends.
double integrate_singular_r(double hv, double t,
                            const std::function<double(double)>& w) {
    const double q = 1.0 / (2.0 - 2.0 * hv);
    const double vmax = std::pow(t, 2.0 - 2.0 * hv);
    const auto f = [&](double v) {
        const double r = std::pow(v, q);
        return q * std::pow(v, q - 1.0) * w(r);
    };
    const double mid = 0.5 * vmax;
    return quad::gl32_graded(f, 0.0, mid, 5, 2.0,
                             quad::GradeTowards::kLower) +
           quad::gl32_graded(f, mid, vmax, 9, 2.5,
                             quad::GradeTowards::kUpper);
}

void require_fractional(fbm::HurstIndex h, const char* who) {
    if (h.is_brownian()) {
        throw ConfigError(std::string(who) +
                          ": Malliavin quantities need H > 1/2");
    }
}

void require_particle(const ParticleEnsemble& ens, std::size_t particle,
                      const char* who) {
    if (particle >= ens.n_particles) {
        throw ConfigError(std::string(who) + ": particle index out of range");
    }
}

}  // namespace

double malliavin_first(const CoefficientModel& model,
                       const ParticleEnsemble& ensemble, std::size_t particle,
                       double r, double t) {
    require_particle(ensemble, particle, "malliavin_first");
    require_fractional(ensemble.h, "malliavin_first");
    const std::size_t n_t = ensemble.grid.index_of(t);
    if (!(r > 0.0)) {
        throw ConfigError("malliavin_first: r must be positive");
    }
    if (r >= t) {
        return 0.0;
    }
    const Context ctx = make_context(model, ensemble, n_t);
    const ExpProfile prof =
        profile_from_a(own_a_cells(ctx, particle), ensemble.grid);
    return std::pow(ensemble.epsilon, ensemble.h.value()) *
           dtilde(ensemble.h, ensemble.grid, ensemble.sigma_history, prof,
                  n_t, r);
}

MalliavinSlice malliavin_slice(const CoefficientModel& model,
                               const ParticleEnsemble& ensemble,
                               std::size_t particle, double t) {
    require_particle(ensemble, particle, "malliavin_slice");
    require_fractional(ensemble.h, "malliavin_slice");
    const TimeGrid& grid = ensemble.grid;
    const std::size_t n_t = grid.index_of(t);

    MalliavinSlice slice{t, grid, ensemble.epsilon, ensemble.h, {}};
    slice.d_values.assign(grid.n_steps() + 1, 0.0);
    if (n_t == 0) {
        return slice;
    }
    const Context ctx = make_context(model, ensemble, n_t);
    const ExpProfile prof = profile_from_a(own_a_cells(ctx, particle), grid);
    const double scale = std::pow(ensemble.epsilon, ensemble.h.value());
    for (std::size_t j = 1; j < n_t; ++j) {
        slice.d_values[j] =
            scale * dtilde(ensemble.h, grid, ensemble.sigma_history, prof,
                           n_t, grid.t(j));
    }
    return slice;
}

ThetaValue theta(const CoefficientModel& model,
                 const ParticleEnsemble& ensemble, double t,
                 std::size_t n_companions, std::size_t max_particles) {
    require_fractional(ensemble.h, "theta");
    if (n_companions == 0 || max_particles == 0) {
        throw ConfigError("theta: companion and particle counts must be positive");
    }
    const TimeGrid& grid = ensemble.grid;
    const fbm::HurstIndex h = ensemble.h;
    const double hv = h.value();
    const std::size_t n_t = grid.index_of(t);
    ThetaValue out{t, 0.0, ensemble.epsilon};
    if (n_t == 0) {
        return out;
    }
    const Context ctx = make_context(model, ensemble, n_t);
    const std::vector<double>& sig = ensemble.sigma_history;

    if (model.state_independent_grad) {
        // The exponent has no state dependence: the conditional expectation
        // equals the value itself and every particle gives the same answer.
        const ExpProfile own = profile_from_a(own_a_cells(ctx, 0), grid);
        const auto w = [&](double r) {
            const double d = dtilde(h, grid, sig, own, n_t, r);
            return d * d;
        };
        out.value = integrate_singular_r(hv, t, w);
        return out;
    }

    const std::size_t n_used = std::min(ensemble.n_particles, max_particles);
    const double noise = std::pow(ensemble.epsilon, hv);
    const fbm::FbmSampler sampler(h, grid);

    double sum = 0.0;
    for (std::size_t i = 0; i < n_used; ++i) {
        const ExpProfile own = profile_from_a(own_a_cells(ctx, i), grid);

        // Fresh driving paths for the conditional-expectation companions,
        // reused across branch points.
        std::vector<std::vector<double>> cdb(n_companions);
        for (std::size_t c = 0; c < n_companions; ++c) {
            cdb[c] = sampler.sample_increments(
                ensemble.seed,
                derive_stream(stream_purpose::kCompanion, i, c));
        }

        // Companion-averaged exponent profiles per branch cell, built on
        // first use.  A branch at cell j shares the stored path up to t_j;
        // the within-cell coefficient a_j comes from the shared state, so
        // the integrand over the cell containing r stays F_r-measurable.
        std::vector<char> have(n_t, 0);
        std::vector<ExpProfile> comp(n_t);
        std::vector<double> ac(n_t, 0.0);
        const auto comp_profile = [&](std::size_t j) -> const ExpProfile& {
            if (!have[j]) {
                std::vector<double> abar(n_t, 0.0);
                std::vector<double> tail_sum(n_t + 1, 0.0);
                for (std::size_t c = 0; c < n_companions; ++c) {
                    double x = ensemble.states[j][i];
                    for (std::size_t k = j; k < n_t; ++k) {
                        ac[k] = ctx.grad_at(k, x);
                        x += ctx.drift_at(k, x) * grid.dt(k) +
                             noise * sig[k] * cdb[c][k];
                    }
                    double cum = 0.0;
                    tail_sum[n_t] += 1.0;
                    for (std::size_t k = n_t; k-- > j;) {
                        cum += ac[k] * grid.dt(k);
                        tail_sum[k] += std::exp(cum);
                        abar[k] += ac[k];
                    }
                }
                ExpProfile p;
                p.acell.assign(n_t, 0.0);
                p.tail.assign(n_t + 1, 1.0);
                const double inv = 1.0 / static_cast<double>(n_companions);
                for (std::size_t k = j; k < n_t; ++k) {
                    p.acell[k] = abar[k] * inv;
                    p.tail[k] = tail_sum[k] * inv;
                }
                comp[j] = std::move(p);
                have[j] = 1;
            }
            return comp[j];
        };

        const auto w = [&](double r) {
            const double own_d = dtilde(h, grid, sig, own, n_t, r);
            const double cond_d = dtilde(
                h, grid, sig, comp_profile(grid.cell_index(r)), n_t, r);
            return own_d * cond_d;
        };
        sum += integrate_singular_r(hv, t, w);
    }
    out.value = sum / static_cast<double>(n_used);
    return out;
}

double nondec_check(const CoefficientModel& model,
                    const ParticleEnsemble& ensemble, double t, double p0) {
    if (!(p0 > 16.0)) {
        throw ConfigError("nondec_check: p0 must exceed 16");
    }
    require_fractional(ensemble.h, "nondec_check");
    const TimeGrid& grid = ensemble.grid;
    const double hv = ensemble.h.value();
    const std::size_t n_t = grid.index_of(t);
    if (n_t == 0) {
        throw ConfigError("nondec_check: t must be positive");
    }

    if (model.constant_diffusion) {
        const double s0 = model.diffusion(
            grid.t(0), EmpiricalMeasure::degenerate(model.x0));
        if (s0 == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        // Inner integral = sigma^2 int_0^t K(t, r)^2 dr = sigma^2 t^{2H}.
        return std::pow(s0 * s0 * std::pow(t, 2.0 * hv), -p0);
    }

    std::vector<double> phi(grid.n_steps(), 0.0);
    for (std::size_t k = 0; k < n_t; ++k) {
        phi[k] = ensemble.sigma_history[k];
    }
    const auto w = [&](double r) {
        const double g = fbm::k_star(ensemble.h, grid, phi, r);
        return g * g;
    };
    const double inner = integrate_singular_r(hv, t, w);
    if (!(inner > 1e-300)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::pow(inner, -p0);
}

double malliavin_second(const CoefficientModel& model,
                        const ParticleEnsemble& ensemble,
                        std::size_t particle, double theta_time, double r,
                        double t) {
    require_particle(ensemble, particle, "malliavin_second");
    require_fractional(ensemble.h, "malliavin_second");
    const TimeGrid& grid = ensemble.grid;
    const std::size_t n_t = grid.index_of(t);
    const std::size_t kr = grid.index_of(r);
    const std::size_t kth = grid.index_of(theta_time);
    if (kr == 0 || kth == 0) {
        throw ConfigError(
            "malliavin_second: r and theta must be positive grid points");
    }
    const std::size_t k0 = std::max(kr, kth);
    if (k0 >= n_t) {
        return 0.0;
    }
    const Context ctx = make_context(model, ensemble, n_t);
    const std::vector<double> acell = own_a_cells(ctx, particle);
    const auto d_r = dtilde_sweep(ensemble.h, grid, ensemble.sigma_history,
                                  acell, n_t, r);
    const auto d_th = dtilde_sweep(ensemble.h, grid, ensemble.sigma_history,
                                   acell, n_t, theta_time);
    const double scale = std::pow(ensemble.epsilon, ensemble.h.value());

    double y = 0.0;
    for (std::size_t k = k0; k < n_t; ++k) {
        const double x = ensemble.states[k][particle];
        const double src =
            ctx.grad2_at(k, x) * (scale * d_r[k]) * (scale * d_th[k]);
        y += (acell[k] * y + src) * grid.dt(k);
        if (!std::isfinite(y)) {
            throw NumericalError("malliavin_second: non-finite value");
        }
    }
    return y;
}

void write_malliavin_csv(const std::vector<MalliavinSlice>& slices,
                         const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) {
        throw ConfigError("write_malliavin_csv: cannot open " + path);
    }
    std::fputs("t,r,d_first\n", f);
    for (const auto& s : slices) {
        for (std::size_t j = 0; j < s.d_values.size(); ++j) {
            std::fprintf(f, "%.17g,%.17g,%.17g\n", s.t, s.grid.t(j),
                         s.d_values[j]);
        }
    }
    std::fclose(f);
}

void write_theta_csv(const std::vector<ThetaValue>& values,
                     const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) {
        throw ConfigError("write_theta_csv: cannot open " + path);
    }
    std::fputs("t,theta\n", f);
    for (const auto& v : values) {
        std::fprintf(f, "%.17g,%.17g\n", v.t, v.value);
    }
    std::fclose(f);
}

}  // namespace mvfbm::malliavin
