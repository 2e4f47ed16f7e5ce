#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/kernel.hpp"
#include "mvfbm/fbm/sampler.hpp"
#include "mvfbm/mckean/limit.hpp"
#include "mvfbm/mckean/model.hpp"
#include "mvfbm/mckean/solve.hpp"
#include "mvfbm/quad.hpp"
#include "mvfbm/rng.hpp"
#include "mvfbm/time_grid.hpp"

using namespace mvfbm;
using namespace mvfbm::mckean;

namespace {

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// A drift that only sees the measure: b = mean(mu).  Along the ODE the
// point mass makes this x' = x.
CoefficientModel make_mean_drift() {
    CoefficientModel m;
    m.id = "mean_drift";
    m.x0 = 1.0;
    m.lipschitz_budget = 1.0;
    m.drift = [](double, double, const EmpiricalMeasure& mu) {
        return mu.mean();
    };
    m.diffusion = [](double, const EmpiricalMeasure&) { return 1.0; };
    m.grad_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.grad2_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.mf_sensitivity = [](double) { return 1.0; };
    m.constant_diffusion = true;
    m.state_independent_grad = true;
    return m;
}

// Zero drift with a constant diffusion level, for dilation checks.
CoefficientModel make_scaled_noise(double level) {
    CoefficientModel m;
    m.id = "scaled_noise";
    m.x0 = 0.0;
    m.lipschitz_budget = 1.0;
    m.drift = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.diffusion = [level](double, const EmpiricalMeasure&) { return level; };
    m.grad_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.grad2_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.mf_sensitivity = [](double) { return 0.0; };
    m.constant_diffusion = true;
    m.state_independent_grad = true;
    return m;
}

}  // namespace

TEST_CASE("ode solver holds constant under zero drift") {
    const auto model = make_pure_noise();
    CHECK(model.probe_warnings.empty());
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto path = solve_ode(model, grid);
    for (double v : path.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("ode solver matches the affine mean-field closed form") {
    // b(t, x, delta_x) = -alpha x + beta x, so x_t = x0 exp((beta-alpha) t).
    MfOuParams p;
    const auto model = make_mf_ou(p);
    CHECK(model.probe_warnings.empty());
    const auto grid = TimeGrid::uniform(1.0, 1000);
    const auto path = solve_ode(model, grid);
    double worst = 0.0;
    for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
        const double exact = std::exp((p.beta - p.alpha) * grid.t(k));
        worst = std::max(worst, std::fabs(path.values[k] - exact));
    }
    CHECK(worst < 1e-6);

    // Interpolation between nodes stays within the local linearization error.
    const double t = 0.6155;
    CHECK(path.interpolate(t) ==
          doctest::Approx(std::exp(-0.5 * t)).epsilon(1e-6));
    CHECK(path.interpolate(1.0) == path.values.back());
}

TEST_CASE("ode solver: pure measure drift grows exponentially") {
    const auto model = make_mean_drift();
    const auto grid = TimeGrid::uniform(1.0, 1000);
    const auto path = solve_ode(model, grid);
    double worst = 0.0;
    for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
        worst = std::max(worst,
                         std::fabs(path.values[k] - std::exp(grid.t(k))));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("ode solver validates the atom count") {
    const auto model = make_pure_noise();
    const auto grid = TimeGrid::uniform(1.0, 8);
    CHECK_THROWS_AS(solve_ode(model, grid, 0), ConfigError);
    // Replicating the point mass does not change the path.
    const auto one = solve_ode(model, grid, 1);
    const auto many = solve_ode(model, grid, 7);
    for (std::size_t k = 0; k < one.values.size(); ++k) {
        CHECK(one.values[k] == many.values[k]);
    }
}

TEST_CASE("particle solver: zero drift integrates the driving noise exactly") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto model = make_pure_noise();
    const double eps = 0.25;
    const auto ens = solve_particles(model, grid, 8, eps, h, 777);

    const double scale = std::pow(eps, h.value());
    for (std::size_t i = 0; i < ens.n_particles; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
            acc += scale * ens.driving[k][i];
            CHECK(ens.states[k + 1][i] == acc);
        }
    }

    // The recorded measure history matches the states.
    CHECK(ens.mean_history[32] ==
          doctest::Approx(sample_mean(ens.states[32])).epsilon(1e-12));
    CHECK(ens.sigma_history[10] == 1.0);
}

TEST_CASE("particle solver: pure noise variance matches the fbm law") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 16);
    const auto model = make_pure_noise();
    const double eps = 0.5;
    const std::size_t n_particles = 4000;
    const auto ens = solve_particles(model, grid, n_particles, eps, h, 31);

    const double expected = std::pow(eps, 2.0 * h.value()) *
                            fbm::fbm_covariance(h, 1.0, 1.0);
    const double se = expected * std::sqrt(2.0 / n_particles);
    CHECK(std::fabs(sample_variance(ens.states.back()) - expected) < 5 * se);
}

TEST_CASE("particle solver: ensemble mean tracks the ode") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 256);
    MfOuParams p;
    const auto model = make_mf_ou(p);
    const auto ens = solve_particles(model, grid, 4000, 0.25, h, 99);
    const double exact = std::exp(p.beta - p.alpha);
    CHECK(std::fabs(ens.mean_history.back() - exact) < 0.025);
}

TEST_CASE("particle solver: small noise collapses to the deterministic path") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 512);
    const auto model = make_mf_ou(MfOuParams{});
    const auto ode = solve_ode(model, grid);
    const auto ens = solve_particles(model, grid, 16, 1e-6, h, 5);
    double worst = 0.0;
    for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
        for (double x : ens.states[k]) {
            worst = std::max(worst, std::fabs(x - ode.values[k]));
        }
    }
    // Euler bias O(dt) plus a vanishing eps^H noise contribution.
    CHECK(worst < 1e-3);
}

TEST_CASE("particle solver is deterministic in the seed") {
    const fbm::HurstIndex h(0.8);
    const auto grid = TimeGrid::uniform(1.0, 32);
    const auto model = make_mf_ou(MfOuParams{});
    const auto a = solve_particles(model, grid, 12, 0.5, h, 1234);
    const auto b = solve_particles(model, grid, 12, 0.5, h, 1234);
    const auto c = solve_particles(model, grid, 12, 0.5, h, 1235);
    CHECK(a.states == b.states);
    CHECK(a.driving == b.driving);
    CHECK(a.states != c.states);
}

TEST_CASE("particle solver reuses driving noise across epsilon") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 32);
    const auto model = make_mf_ou(MfOuParams{});
    const auto a = solve_particles(model, grid, 6, 0.5, h, 42);
    const auto b = solve_particles(model, grid, 6, 0.125, h, 42);
    CHECK(a.driving == b.driving);
}

TEST_CASE("particle solver: vectorized and generic steppers agree") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 32);
    MfOuParams p;
    p.alpha = 0.8;
    p.beta = 0.5;
    p.gamma = 0.3;
    p.sigma0 = 1.2;
    p.kappa = 0.7;
    p.gamma_w = 0.4;
    p.x0 = 0.5;
    const auto fast = make_mf_ou(p);
    auto generic = fast;
    generic.has_fast_path = false;

    const auto a = solve_particles(fast, grid, 64, 0.5, h, 17);
    const auto b = solve_particles(generic, grid, 64, 0.5, h, 17);
    for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
        for (std::size_t i = 0; i < 64; ++i) {
            CHECK(a.states[k][i] ==
                  doctest::Approx(b.states[k][i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("particle solver validates its inputs") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 8);
    const auto model = make_pure_noise();
    CHECK_THROWS_AS(solve_particles(model, grid, 1, 0.5, h, 1), ConfigError);
    CHECK_THROWS_AS(solve_particles(model, grid, 4, 0.0, h, 1), ConfigError);
    CHECK_THROWS_AS(solve_particles(model, grid, 4, 1.5, h, 1), ConfigError);
}

TEST_CASE("particle solver reports explosions with the step index") {
    CoefficientModel cubic;
    cubic.id = "cubic_blowup";
    cubic.x0 = 2.0;
    cubic.drift = [](double, double x, const EmpiricalMeasure&) {
        return x * x * x;
    };
    cubic.diffusion = [](double, const EmpiricalMeasure&) { return 1.0; };
    cubic.grad_b = [](double, double x, const EmpiricalMeasure&) {
        return 3.0 * x * x;
    };
    cubic.grad2_b = [](double, double x, const EmpiricalMeasure&) {
        return 6.0 * x;
    };
    cubic.mf_sensitivity = [](double) { return 0.0; };

    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    CHECK_THROWS_AS(solve_particles(cubic, grid, 2, 1e-3, h, 3),
                    NumericalError);
}

TEST_CASE("model probes surface violations as warnings") {
    MfOuParams p;
    p.sigma0 = -1.0;  // diffusion identically negative
    p.gamma = 0.0;
    const auto model = make_mf_ou(p);
    REQUIRE_FALSE(model.probe_warnings.empty());
    bool mentions_positivity = false;
    for (const auto& w : model.probe_warnings) {
        if (w.find("positivity") != std::string::npos) {
            mentions_positivity = true;
        }
    }
    CHECK(mentions_positivity);
    CHECK(make_mf_ou(MfOuParams{}).probe_warnings.empty());
}

TEST_CASE("trajectory dump is one row per grid point and particle") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(0.5, 4);
    const auto ens =
        solve_particles(make_pure_noise(), grid, 3, 0.5, h, 2024);
    const std::string path = "trajectories_test.csv";
    write_trajectories_csv(ens, path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,particle_id,value");
    std::size_t rows = 0;
    double max_abs_gap = 0.0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string t_s, id_s, v_s;
        REQUIRE(std::getline(row, t_s, ','));
        REQUIRE(std::getline(row, id_s, ','));
        REQUIRE(std::getline(row, v_s, ','));
        const std::size_t k = rows / 3;
        const std::size_t i = rows % 3;
        CHECK(std::stod(t_s) == doctest::Approx(grid.t(k)).epsilon(1e-15));
        CHECK(std::stoul(id_s) == i);
        max_abs_gap = std::max(
            max_abs_gap, std::fabs(std::stod(v_s) - ens.states[k][i]));
        ++rows;
    }
    CHECK(rows == 5 * 3);
    // %.17g round-trips doubles exactly.
    CHECK(max_abs_gap == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("fluctuations recover the driving paths for pure noise") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto model = make_pure_noise();
    const auto ode = solve_ode(model, grid);
    const auto ens_a = solve_particles(model, grid, 8, 0.25, h, 777);
    const auto ens_b = solve_particles(model, grid, 8, 0.03125, h, 777);

    const auto flu_a = fluctuation(ens_a, ode, 1.0);
    const auto flu_b = fluctuation(ens_b, ode, 1.0);
    for (std::size_t i = 0; i < 8; ++i) {
        double path_sum = 0.0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
            path_sum += ens_a.driving[k][i];
        }
        // X~ = (eps^H B) / eps^H up to roundoff, for every eps.
        CHECK(flu_a[i] == doctest::Approx(path_sum).epsilon(1e-12));
        CHECK(flu_b[i] == doctest::Approx(path_sum).epsilon(1e-12));
    }
}

TEST_CASE("fluctuation variance approaches the pure-noise limit variance") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 16);
    const auto model = make_pure_noise();
    const auto ode = solve_ode(model, grid);
    const std::size_t n_particles = 4000;
    const auto ens = solve_particles(model, grid, n_particles, 0.5, h, 31);

    SUBCASE("terminal time") {
        const auto flu = fluctuation(ens, ode, 1.0);
        const double se = std::sqrt(2.0 / n_particles);
        CHECK(std::fabs(sample_variance(flu) - 1.0) < 5 * se);
    }
    SUBCASE("interior grid point") {
        const auto flu = fluctuation(ens, ode, 0.5);
        const double expected = std::pow(0.5, 2.0 * h.value());
        const double se = expected * std::sqrt(2.0 / n_particles);
        CHECK(std::fabs(sample_variance(flu) - expected) < 5 * se);
    }
}

TEST_CASE("limit law: pure noise reproduces the fbm variance") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    const auto model = make_pure_noise();
    const auto ode = solve_ode(model, grid);

    const auto law1 = limit_law(model, ode, 1.0, h);
    CHECK(law1.mean == 0.0);
    CHECK(law1.variance == doctest::Approx(1.0).epsilon(1e-12));
    for (double a : law1.decay) {
        CHECK(a == 0.0);
    }
    for (double f : law1.integrand) {
        CHECK(f == 1.0);
    }

    const auto law_half = limit_law(model, ode, 0.5, h);
    CHECK(law_half.variance ==
          doctest::Approx(std::pow(0.5, 2.0 * h.value())).epsilon(1e-12));

    const auto law0 = limit_law(model, ode, 0.0, h);
    CHECK(law0.variance == 0.0);
}

TEST_CASE("limit law: constant diffusion dilates as a power of time") {
    const fbm::HurstIndex h(0.85);
    const auto grid = TimeGrid::uniform(1.0, 128);
    const auto model = make_scaled_noise(2.0);
    const auto ode = solve_ode(model, grid);
    const auto law = limit_law(model, ode, 0.75, h);
    CHECK(law.variance ==
          doctest::Approx(4.0 * std::pow(0.75, 2.0 * h.value()))
              .epsilon(1e-10));
}

TEST_CASE("limit law: fractional OU variance matches independent oracles") {
    const fbm::HurstIndex h(0.7);
    const double hv = h.value();
    const double alpha = 1.0;
    const double t = 1.0;
    MfOuParams p;
    p.alpha = alpha;
    p.beta = 0.0;
    const auto model = make_mf_ou(p);
    const auto grid = TimeGrid::uniform(t, 512);
    const auto ode = solve_ode(model, grid);
    const auto law = limit_law(model, ode, t, h);

    const double w = fbm::cm_weight(h);

    // Route one: reduce the double integral over u, v to a single integral
    // over the lag tau = |u - v| (the inner integral is elementary for the
    // exponential profile):
    //   Var = (w sigma^2 / alpha) int_0^t tau^{2H-2}
    //         (e^{-alpha tau} - e^{-alpha (2t - tau)}) dtau,
    // then absorb the tau^{2H-2} singularity with the substitution
    // s = tau^{2H-1}, under which tau^{2H-2} dtau = nu ds exactly.
    const double nu = 1.0 / (2.0 * hv - 1.0);
    const auto profile = [&](double s) {
        const double tau = std::pow(s, nu);
        return std::exp(-alpha * tau) - std::exp(-alpha * (2.0 * t - tau));
    };
    const double route_one =
        (w / alpha) * nu *
        quad::gl32_graded(profile, 0.0, std::pow(t, 2.0 * hv - 1.0), 8, 2.0,
                          quad::GradeTowards::kLower);

    // Route two: the literal 2-D sum at 1e4 nodes.  Cells touching the
    // diagonal use the exact integral of |u-v|^{2H-2} over the cell pair;
    // farther pairs use the midpoint value.
    const std::size_t m = 100;
    const double dt = t / static_cast<double>(m);
    const auto f = [&](double s) { return std::exp(-alpha * (t - s)); };
    const auto g2h = [&](double x) { return std::pow(x, 2.0 * hv); };
    double brute = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = (static_cast<double>(i) + 0.5) * dt;
        for (std::size_t j = 0; j < m; ++j) {
            const double v = (static_cast<double>(j) + 0.5) * dt;
            const std::size_t lag = i > j ? i - j : j - i;
            double weight;
            if (lag == 0) {
                weight = std::pow(dt, 2.0 * hv);
            } else if (lag == 1) {
                weight = 0.5 * (g2h(2.0 * dt) - 2.0 * g2h(dt));
            } else {
                weight = w * std::pow(std::fabs(u - v), 2.0 * hv - 2.0) * dt *
                         dt;
            }
            brute += f(u) * f(v) * weight;
        }
    }

    CHECK(law.variance == doctest::Approx(route_one).epsilon(5e-4));
    CHECK(law.variance == doctest::Approx(brute).epsilon(0.01));
}

TEST_CASE("Z sampler: pure noise reproduces the fbm endpoint") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto model = make_pure_noise();
    const auto ode = solve_ode(model, grid);
    const std::uint64_t seed = 4242;
    const auto z = simulate_Z(model, ode, grid, h, seed, 6);

    const fbm::FbmSampler sampler(h, grid);
    for (std::size_t j = 0; j < z.size(); ++j) {
        const auto db = sampler.sample_increments(
            seed, derive_stream(stream_purpose::kZSample, j));
        double b_t = 0.0;
        for (double d : db) {
            b_t += d;
        }
        CHECK(z[j] == b_t);
    }
}

TEST_CASE("Z sampler: variance agrees with the limit law") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 256);
    const auto model = make_mf_ou(MfOuParams{});
    const auto ode = solve_ode(model, grid);
    const auto law = limit_law(model, ode, 1.0, h);

    const std::size_t n_samples = 4000;
    const auto z = simulate_Z(model, ode, grid, h, 8, n_samples);
    const double var = sample_variance(z);
    const double se = law.variance * std::sqrt(2.0 / n_samples);
    CHECK(std::fabs(var - law.variance) < 5 * se);
    CHECK(std::fabs(sample_mean(z)) <
          5 * std::sqrt(law.variance / n_samples));
}

TEST_CASE("U process: zero drift makes U equal the fluctuations") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto model = make_pure_noise();
    const auto ode = solve_ode(model, grid);
    const auto ens = solve_particles(model, grid, 16, 0.25, h, 55);
    const auto u = simulate_U(model, ens, ode, 1.0);
    const auto flu = fluctuation(ens, ode, 1.0);
    REQUIRE(u.size() == flu.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(u[i] == doctest::Approx(flu[i]).epsilon(1e-12));
    }
}

TEST_CASE("U process: coupled residual shrinks with epsilon") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    MfOuParams p;
    p.kappa = 0.6;
    p.gamma_w = 0.3;
    const auto model = make_mf_ou(p);
    const auto ode = solve_ode(model, grid);

    const auto residual = [&](double eps) {
        const auto ens = solve_particles(model, grid, 256, eps, h, 314);
        const auto flu = fluctuation(ens, ode, 1.0);
        const auto u = simulate_U(model, ens, ode, 1.0);
        double s = 0.0;
        for (std::size_t i = 0; i < flu.size(); ++i) {
            s += (flu[i] - u[i]) * (flu[i] - u[i]);
        }
        return s / static_cast<double>(flu.size());
    };

    const double coarse = residual(0.5);
    const double fine = residual(0.125);
    CHECK(coarse < 1.0);
    CHECK(fine < coarse / 2.0);

    // E|U|^2 stays bounded across the epsilon grid.
    for (double eps : {0.5, 0.25, 0.125}) {
        const auto ens = solve_particles(model, grid, 64, eps, h, 11);
        const auto u = simulate_U(model, ens, ode, 1.0);
        double m2 = 0.0;
        for (double v : u) {
            m2 += v * v;
        }
        m2 /= static_cast<double>(u.size());
        CHECK(m2 < 20.0);
    }
}

TEST_CASE("fluctuation law approaches the limit Gaussian") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 256);
    const auto model = make_mf_ou(MfOuParams{});
    const auto ode = solve_ode(model, grid);
    const auto law = limit_law(model, ode, 1.0, h);
    const double eps = 1.0 / 64.0;
    const std::size_t n_particles = 10000;
    const auto ens = solve_particles(model, grid, n_particles, eps, h, 606);
    auto flu = fluctuation(ens, ode, 1.0);
    std::sort(flu.begin(), flu.end());

    const double sdev = std::sqrt(law.variance);
    double ks = 0.0;
    for (std::size_t i = 0; i < flu.size(); ++i) {
        const double c = normal_cdf(flu[i] / sdev);
        const double lo = static_cast<double>(i) / flu.size();
        const double hi = static_cast<double>(i + 1) / flu.size();
        ks = std::max(ks, std::max(std::fabs(c - lo), std::fabs(c - hi)));
    }
    CHECK(ks < 0.05);
}

TEST_CASE("ensemble moments stay bounded across the epsilon grid") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    MfOuParams p;
    p.kappa = 0.5;
    p.gamma_w = 0.2;
    p.gamma = 0.3;
    const auto model = make_mf_ou(p);

    for (double eps : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}) {
        const auto ens = solve_particles(model, grid, 128, eps, h, 21);
        double sup_sq = 0.0;
        double m4 = 0.0;
        for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
            const auto mu = ens.measure_at(k);
            m4 = std::max(m4, mu.moment(4.0));
            for (double x : ens.states[k]) {
                sup_sq = std::max(sup_sq, x * x);
            }
        }
        CHECK(m4 < 50.0);
        CHECK(sup_sq < 100.0);
    }
}

TEST_CASE("fbm integrals of the diffusion obey the moment bound") {
    // E[sup_k |sum sigma db|^2] is finite and within a fixed multiple of
    // int sigma^2 ds for the measure-coupled OU model.
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    MfOuParams p;
    p.gamma = 0.3;
    const auto model = make_mf_ou(p);
    const auto ens = solve_particles(model, grid, 256, 0.5, h, 77);

    double rhs = 0.0;
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        rhs += ens.sigma_history[k] * ens.sigma_history[k] * grid.dt(k);
    }
    double lhs = 0.0;
    for (std::size_t i = 0; i < ens.n_particles; ++i) {
        double acc = 0.0;
        double sup = 0.0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
            acc += ens.sigma_history[k] * ens.driving[k][i];
            sup = std::max(sup, acc * acc);
        }
        lhs += sup;
    }
    lhs /= static_cast<double>(ens.n_particles);
    CHECK(lhs > 0.0);
    CHECK(lhs < 10.0 * rhs);
}
