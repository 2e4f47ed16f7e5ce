#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/fbm/kernel.hpp"
#include "mvfbm/malliavin.hpp"
#include "mvfbm/mckean/model.hpp"
#include "mvfbm/mckean/solve.hpp"
#include "mvfbm/quad.hpp"
#include "mvfbm/time_grid.hpp"

using namespace mvfbm;
using namespace mvfbm::mckean;
using namespace mvfbm::malliavin;

namespace {

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

// Drift-free model with a time-dependent diffusion, exercised through the
// generic coefficient path.
CoefficientModel make_time_sigma() {
    CoefficientModel m;
    m.id = "time_sigma";
    m.x0 = 0.0;
    m.lipschitz_budget = 1.5;
    m.drift = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.diffusion = [](double t, const EmpiricalMeasure&) {
        return 1.0 + 0.5 * t;
    };
    m.grad_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.grad2_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.mf_sensitivity = [](double) { return 0.0; };
    m.constant_diffusion = false;
    m.state_independent_grad = true;
    m.has_fast_path = false;
    return m;
}

CoefficientModel make_zero_diffusion() {
    CoefficientModel m;
    m.id = "zero_sigma";
    m.x0 = 0.0;
    m.lipschitz_budget = 1.0;
    m.drift = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.diffusion = [](double, const EmpiricalMeasure&) { return 0.0; };
    m.grad_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.grad2_b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    m.mf_sensitivity = [](double) { return 0.0; };
    m.constant_diffusion = true;
    m.state_independent_grad = true;
    m.has_fast_path = false;
    return m;
}

// Diffusion values per grid cell (sigma_history also carries the unused
// final-time entry).
std::vector<double> cell_sigma(const ParticleEnsemble& ens) {
    return {ens.sigma_history.begin(), ens.sigma_history.end() - 1};
}

// int_0^t w(r) dr with the same end-point treatment the library uses, kept
// here as an independent reference for inequality checks.
double singular_integral(double hv, double t,
                         const std::function<double(double)>& w) {
    const double q = 1.0 / (2.0 - 2.0 * hv);
    const double vmax = std::pow(t, 2.0 - 2.0 * hv);
    const auto f = [&](double v) {
        const double r = std::pow(v, q);
        return q * std::pow(v, q - 1.0) * w(r);
    };
    return quad::gl32_graded(f, 0.0, 0.5 * vmax, 5, 2.0,
                             quad::GradeTowards::kLower) +
           quad::gl32_graded(f, 0.5 * vmax, vmax, 9, 2.5,
                             quad::GradeTowards::kUpper);
}

}  // namespace

TEST_CASE("first derivative matches the kernel closed form for pure noise") {
    const auto model = make_pure_noise();
    for (double hv : {0.7, 0.9}) {
        const fbm::HurstIndex h(hv);
        const auto grid = TimeGrid::uniform(1.0, 256);
        const double eps = 0.5;
        const auto ens = solve_particles(model, grid, 2, eps, h, 77);
        const double scale = std::pow(eps, hv);
        for (double r : {grid.t(1), 0.25, 0.3, 0.75, grid.t(255)}) {
            const double got = malliavin_first(model, ens, 0, r, 1.0);
            const double want = scale * fbm::kernel_K(h, 1.0, r);
            CHECK(std::fabs(got - want) < 1e-8 * want);
        }
        // Shorter horizon uses only the cells below it.
        const double got = malliavin_first(model, ens, 1, 0.25, 0.5);
        const double want = scale * fbm::kernel_K(h, 0.5, 0.25);
        CHECK(std::fabs(got - want) < 1e-8 * want);
        // Empty integration range.
        CHECK(malliavin_first(model, ens, 0, 1.0, 1.0) == 0.0);
        CHECK(malliavin_first(model, ens, 0, 0.75, 0.5) == 0.0);
    }
}

TEST_CASE("zero drift with time-dependent diffusion matches the dual route") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    const auto model = make_time_sigma();
    const double eps = 0.25;
    const auto ens = solve_particles(model, grid, 2, eps, h, 31);
    const double scale = std::pow(eps, 0.7);
    const auto phi = cell_sigma(ens);
    for (double r : {0.25, 0.6015625, 0.9921875}) {
        const double got = malliavin_first(model, ens, 0, r, 1.0);
        const double want = scale * fbm::k_star(h, grid, phi, r);
        CHECK(std::fabs(got - want) < 1e-10 * std::fabs(want));
    }
}

TEST_CASE("closed form satisfies its defining integral equation") {
    // D~(r, t) = int_r^t grad_b(u) D~(r, u) du + int_r^t sigma dK/du du.
    // The residual of the closed form against a direct discretization of
    // the right side is pure quadrature error and shrinks under grid
    // refinement; a sign mistake in the exponent would leave an O(1) gap.
    const fbm::HurstIndex h(0.7);
    MfOuParams p;
    p.kappa = 0.5;
    p.gamma = 0.3;
    const auto model = make_mf_ou(p);
    const double eps = 0.5;
    const double hv = 0.7;

    double previous_residual = 0.0;
    for (std::size_t n : {std::size_t{256}, std::size_t{512}}) {
        const auto grid = TimeGrid::uniform(1.0, n);
        const auto ens = solve_particles(model, grid, 4, eps, h, 404);
        const double scale = std::pow(eps, hv);
        const double r = 0.25;
        const std::size_t kr = grid.index_of(r);

        std::vector<double> dtil(n + 1, 0.0);
        for (std::size_t j = kr + 1; j <= n; ++j) {
            dtil[j] =
                malliavin_first(model, ens, 0, r, grid.t(j)) / scale;
        }
        std::vector<double> a(n);
        for (std::size_t k = 0; k < n; ++k) {
            a[k] = model.grad_b(grid.t(k), ens.states[k][0],
                                ens.measure_at(k));
        }

        // First cell: D~ grows like (u - r)^{H - 1/2}, so its cell average
        // is the endpoint value over H + 1/2.
        double rhs = a[kr] * dtil[kr + 1] * grid.dt(kr) / (hv + 0.5);
        for (std::size_t k = kr + 1; k < n; ++k) {
            rhs += a[k] * 0.5 * (dtil[k] + dtil[k + 1]) * grid.dt(k);
        }
        rhs += fbm::k_star(h, grid, cell_sigma(ens), r);

        const double residual = std::fabs(dtil[n] - rhs);
        CHECK(residual < 0.01 * std::fabs(dtil[n]));
        if (n == 512) {
            CHECK(residual < previous_residual);
        }
        previous_residual = residual;
    }
}

TEST_CASE("theta for pure noise reproduces the covariance identity") {
    const auto model = make_pure_noise();
    for (double hv : {0.55, 0.7, 0.9}) {
        const fbm::HurstIndex h(hv);
        const auto grid = TimeGrid::uniform(1.0, 256);
        const auto ens = solve_particles(model, grid, 2, 0.5, h, 5);
        const auto th = theta(model, ens, 1.0);
        CHECK(std::fabs(th.value - 1.0) < 1e-3);
        CHECK(th.t == 1.0);
        CHECK(th.epsilon == 0.5);
    }
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 256);
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 5);
    for (double t : {0.5, 0.125}) {
        const double expected = std::pow(t, 1.4);
        const auto th = theta(model, ens, t);
        CHECK(std::fabs(th.value - expected) < 1e-3 * expected);
    }
    // The normalization cancels the noise scale entirely.
    const auto other = solve_particles(model, grid, 2, 0.03125, h, 5);
    CHECK(theta(model, other, 0.5).value == theta(model, ens, 0.5).value);
}

TEST_CASE("theta branches agree when the exponent ignores the state") {
    // With kappa = 0 the conditional expectation is the identity, so the
    // companion machinery must reproduce the direct value.
    MfOuParams p;
    p.beta = 0.4;
    const auto model = make_mf_ou(p);
    REQUIRE(model.state_independent_grad);
    auto forced = model;
    forced.state_independent_grad = false;

    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 99);
    const double direct = theta(model, ens, 1.0).value;
    const double via_companions = theta(forced, ens, 1.0, 4, 2).value;
    CHECK(std::fabs(via_companions - direct) < 1e-10 * direct);
}

TEST_CASE("theta dominates the dissipation lower bound") {
    MfOuParams p;
    p.kappa = 0.5;
    p.gamma = 0.3;
    p.gamma_w = 0.2;
    const auto model = make_mf_ou(p);
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 256);
    const auto ens = solve_particles(model, grid, 64, 0.25, h, 2027);

    const auto th = theta(model, ens, 1.0, 32, 4);
    CHECK(th.value > 0.0);

    // Bounding exp(int grad_b) below by exp(-budget (t - s)) on both
    // factors of the integrand gives a floor in terms of the diffusion
    // kernel integral alone.
    const auto phi = cell_sigma(ens);
    const auto w = [&](double r) {
        const double g = fbm::k_star(h, grid, phi, r);
        return g * g;
    };
    const double floor =
        std::exp(-2.0 * model.lipschitz_budget) * singular_integral(0.7, 1.0, w);
    CHECK(th.value >= 0.999 * floor);
}

TEST_CASE("nondegeneracy check uses the closed form for constant diffusion") {
    MfOuParams p;
    const auto model = make_mf_ou(p);
    REQUIRE(model.constant_diffusion);
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 1);

    CHECK(nondec_check(model, ens, 1.0, 17.0) == 1.0);
    const double expected = std::pow(std::pow(0.5, 1.4), -17.0);
    CHECK(std::fabs(nondec_check(model, ens, 0.5, 17.0) - expected) <
          1e-12 * expected);

    // The quadrature route must land on the same value.
    auto forced = model;
    forced.constant_diffusion = false;
    const double via_quadrature = nondec_check(forced, ens, 0.5, 17.0);
    CHECK(std::fabs(via_quadrature - expected) < 0.01 * expected);
}

TEST_CASE("nondegeneracy check flags a vanishing diffusion") {
    const auto model = make_zero_diffusion();
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 32);
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 1);
    CHECK(std::isinf(nondec_check(model, ens, 1.0, 17.0)));
    auto forced = model;
    forced.constant_diffusion = false;
    CHECK(std::isinf(nondec_check(forced, ens, 1.0, 17.0)));
}

TEST_CASE("second derivative vanishes without drift curvature") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 64);
    const auto pure = make_pure_noise();
    const auto ens = solve_particles(pure, grid, 2, 0.5, h, 3);
    CHECK(malliavin_second(pure, ens, 0, grid.t(32), grid.t(16), 1.0) == 0.0);

    const auto affine = make_mf_ou(MfOuParams{});
    const auto ens2 = solve_particles(affine, grid, 2, 0.5, h, 3);
    CHECK(malliavin_second(affine, ens2, 0, grid.t(32), grid.t(16), 1.0) ==
          0.0);
}

TEST_CASE("second derivative is symmetric and scales at twice the rate") {
    MfOuParams p;
    p.kappa = 0.7;
    const auto model = make_mf_ou(p);
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    const double r = grid.t(32);
    const double th_t = grid.t(48);

    std::vector<double> second_moment;
    for (double eps : {0.125, 0.03125}) {
        const auto ens = solve_particles(model, grid, 256, eps, h, 510);
        std::vector<double> sq(ens.n_particles);
        for (std::size_t i = 0; i < ens.n_particles; ++i) {
            const double d2 = malliavin_second(model, ens, i, th_t, r, 1.0);
            sq[i] = d2 * d2;
            if (i == 0) {
                CHECK(malliavin_second(model, ens, i, r, th_t, 1.0) == d2);
            }
        }
        second_moment.push_back(sample_mean(sq));
    }
    const double slope = std::log(second_moment[0] / second_moment[1]) /
                         std::log(0.125 / 0.03125);
    CHECK(slope > 4 * 0.7 - 0.3);
    CHECK(slope < 4 * 0.7 + 0.3);

    // Beyond the horizon the derivative has not started yet.
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 510);
    CHECK(malliavin_second(model, ens, 0, grid.t(48), grid.t(48),
                           grid.t(48)) == 0.0);
}

TEST_CASE("first derivative second moment scales like the noise squared") {
    MfOuParams p;
    p.kappa = 0.5;
    const auto model = make_mf_ou(p);
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    const double r = grid.t(32);

    std::vector<double> second_moment;
    for (double eps : {0.25, 0.0625}) {
        const auto ens = solve_particles(model, grid, 256, eps, h, 840);
        std::vector<double> sq(ens.n_particles);
        for (std::size_t i = 0; i < ens.n_particles; ++i) {
            const double d = malliavin_first(model, ens, i, r, 1.0);
            sq[i] = d * d;
        }
        second_moment.push_back(sample_mean(sq));
    }
    const double slope = std::log(second_moment[0] / second_moment[1]) /
                         std::log(0.25 / 0.0625);
    CHECK(slope > 2 * 0.7 - 0.1);
    CHECK(slope < 2 * 0.7 + 0.1);
}

TEST_CASE("slice is positive inside the horizon and zero outside") {
    MfOuParams p;
    p.kappa = 0.5;
    p.gamma = 0.3;
    const auto model = make_mf_ou(p);
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 128);
    const auto ens = solve_particles(model, grid, 4, 0.5, h, 21);

    const auto slice = malliavin_slice(model, ens, 1, 0.5);
    REQUIRE(slice.d_values.size() == 129);
    CHECK(slice.t == 0.5);
    CHECK(slice.epsilon == 0.5);
    CHECK(slice.d_values[0] == 0.0);
    for (std::size_t j = 1; j < 64; ++j) {
        CHECK(slice.d_values[j] > 0.0);
    }
    for (std::size_t j = 64; j <= 128; ++j) {
        CHECK(slice.d_values[j] == 0.0);
    }
    for (std::size_t j : {std::size_t{1}, std::size_t{20}, std::size_t{63}}) {
        CHECK(slice.d_values[j] ==
              malliavin_first(model, ens, 1, grid.t(j), 0.5));
    }
}

TEST_CASE("derivative and theta dumps match the documented shape") {
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 8);
    const auto model = make_pure_noise();
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 6);

    std::vector<MalliavinSlice> slices;
    slices.push_back(malliavin_slice(model, ens, 0, 0.5));
    slices.push_back(malliavin_slice(model, ens, 0, 1.0));
    const std::string path = "malliavin_test.csv";
    write_malliavin_csv(slices, path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,r,d_first");
    std::size_t rows = 0;
    double max_gap = 0.0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string t_s, r_s, d_s;
        REQUIRE(std::getline(row, t_s, ','));
        REQUIRE(std::getline(row, r_s, ','));
        REQUIRE(std::getline(row, d_s, ','));
        const auto& s = slices[rows / 9];
        const std::size_t j = rows % 9;
        CHECK(std::stod(t_s) == s.t);
        CHECK(std::stod(r_s) == grid.t(j));
        max_gap = std::max(max_gap,
                           std::fabs(std::stod(d_s) - s.d_values[j]));
        ++rows;
    }
    CHECK(rows == 18);
    CHECK(max_gap == 0.0);
    std::remove(path.c_str());

    std::vector<ThetaValue> values;
    values.push_back(theta(model, ens, 0.5));
    values.push_back(theta(model, ens, 1.0));
    const std::string tpath = "theta_test.csv";
    write_theta_csv(values, tpath);
    std::ifstream tin(tpath);
    REQUIRE(tin.good());
    REQUIRE(std::getline(tin, line));
    CHECK(line == "t,theta");
    std::size_t trows = 0;
    while (std::getline(tin, line)) {
        std::istringstream row(line);
        std::string t_s, v_s;
        REQUIRE(std::getline(row, t_s, ','));
        REQUIRE(std::getline(row, v_s, ','));
        CHECK(std::stod(t_s) == values[trows].t);
        CHECK(std::stod(v_s) == values[trows].value);
        ++trows;
    }
    CHECK(trows == 2);
    std::remove(tpath.c_str());
}

TEST_CASE("malliavin entry points validate their inputs") {
    const auto model = make_pure_noise();
    const fbm::HurstIndex h(0.7);
    const auto grid = TimeGrid::uniform(1.0, 16);
    const auto ens = solve_particles(model, grid, 2, 0.5, h, 9);

    CHECK_THROWS_AS(malliavin_first(model, ens, 5, 0.25, 1.0), ConfigError);
    CHECK_THROWS_AS(malliavin_first(model, ens, 0, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(malliavin_first(model, ens, 0, -0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(theta(model, ens, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(theta(model, ens, 1.0, 8, 0), ConfigError);
    CHECK_THROWS_AS(nondec_check(model, ens, 1.0, 16.0), ConfigError);
    CHECK_THROWS_AS(nondec_check(model, ens, 1.0, 5.0), ConfigError);
    CHECK_THROWS_AS(nondec_check(model, ens, 0.0, 17.0), ConfigError);
    CHECK_THROWS_AS(malliavin_second(model, ens, 0, 0.0, 0.25, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(malliavin_second(model, ens, 0, 0.25, 0.0, 1.0),
                    ConfigError);

    // Theta at the origin is an empty integral.
    CHECK(theta(model, ens, 0.0).value == 0.0);

    const auto bm = fbm::HurstIndex::brownian_sanity();
    const auto bens = solve_particles(model, grid, 2, 0.5, bm, 9);
    CHECK_THROWS_AS(malliavin_first(model, bens, 0, 0.25, 1.0), ConfigError);
    CHECK_THROWS_AS(malliavin_slice(model, bens, 0, 1.0), ConfigError);
    CHECK_THROWS_AS(theta(model, bens, 1.0), ConfigError);
    CHECK_THROWS_AS(nondec_check(model, bens, 1.0, 17.0), ConfigError);
}
