#include "mvfbm/mckean/model.hpp"

#include <cmath>
#include <sstream>

#include "mvfbm/rng.hpp"

namespace mvfbm::mckean {

namespace {

// Empirical (A1) check: sample (t, x, y, mu, nu) points and verify the
// declared Lipschitz budget and diffusion positivity on the tested domain.
// Violations become warnings on the model, not errors; the budget is a
// declaration, and the probe is the sanity net behind it.
void probe_model(CoefficientModel& model) {
    RandomStream rng(0x51CCBEEF,
                     derive_stream(stream_purpose::kModelProbe, 0));
    const double slack = 1e-9;
    int drift_hits = 0;
    int diff_hits = 0;
    int positivity_hits = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const double t = rng.next_uniform();
        const double x = 2.0 * rng.next_normal();
        const double y = 2.0 * rng.next_normal();
        std::vector<double> atoms_a(8), atoms_b(8);
        for (std::size_t i = 0; i < 8; ++i) {
            atoms_a[i] = 1.5 * rng.next_normal();
            atoms_b[i] = 1.5 * rng.next_normal();
        }
        const EmpiricalMeasure mu(std::move(atoms_a));
        const EmpiricalMeasure nu(std::move(atoms_b));
        const double w = wasserstein(mu, nu, model.theta);

        const double db =
            std::fabs(model.drift(t, x, mu) - model.drift(t, y, nu));
        if (db > model.lipschitz_budget * (std::fabs(x - y) + w) + slack) {
            ++drift_hits;
        }
        const double ds =
            std::fabs(model.diffusion(t, mu) - model.diffusion(t, nu));
        if (ds > model.lipschitz_budget * w + slack) {
            ++diff_hits;
        }
        if (!(model.diffusion(t, mu) > 0.0)) {
            ++positivity_hits;
        }
    }
    const auto warn = [&](const char* what, int hits) {
        if (hits > 0) {
            std::ostringstream msg;
            msg << model.id << ": " << what << " violated on " << hits
                << "/200 probe points";
            model.probe_warnings.push_back(msg.str());
        }
    };
    warn("drift Lipschitz budget", drift_hits);
    warn("diffusion Lipschitz budget", diff_hits);
    warn("diffusion positivity", positivity_hits);
}

}  // namespace

CoefficientModel make_pure_noise(double sigma) {
    CoefficientModel m;
    m.id = "pure_noise";
    m.x0 = 0.0;
    m.theta = 2.0;
    m.lipschitz_budget = 1.0;
    m.drift = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.diffusion = [sigma](double, const EmpiricalMeasure&) { return sigma; };
    m.grad_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.grad2_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.mf_sensitivity = [](double) { return 0.0; };
    m.constant_diffusion = true;
    m.state_independent_grad = true;
    m.has_fast_path = true;
    m.ou = MfOuParams{0.0, 0.0, 0.0, sigma, 0.0, 0.0, 0.0};
    probe_model(m);
    return m;
}

CoefficientModel make_mf_ou(const MfOuParams& p) {
    CoefficientModel m;
    m.id = "mf_ou";
    m.x0 = p.x0;
    m.theta = 2.0;
    m.lipschitz_budget =
        std::max({std::fabs(p.alpha) + std::fabs(p.kappa), std::fabs(p.beta),
                  std::fabs(p.gamma) + std::fabs(p.gamma_w), 1e-12});
    m.drift = [p](double, double x, const EmpiricalMeasure& mu) {
        return -p.alpha * x + p.beta * mu.mean() + p.kappa * ou_curvature(x);
    };
    m.diffusion = [p](double, const EmpiricalMeasure& mu) {
        double s = p.sigma0 + p.gamma * mu.mean();
        if (p.gamma_w != 0.0) {
            s += p.gamma_w * mu.stdev();
        }
        return s;
    };
    m.grad_b = [p](double, double x, const EmpiricalMeasure&) {
        return -p.alpha + p.kappa * ou_curvature_d1(x);
    };
    m.grad2_b = [p](double, double x, const EmpiricalMeasure&) {
        return p.kappa * ou_curvature_d2(x);
    };
    m.mf_sensitivity = [p](double) { return p.beta; };
    m.constant_diffusion = (p.gamma == 0.0 && p.gamma_w == 0.0);
    m.state_independent_grad = (p.kappa == 0.0);
    m.has_fast_path = true;
    m.ou = p;
    probe_model(m);
    return m;
}

}  // namespace mvfbm::mckean
