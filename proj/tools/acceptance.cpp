// Acceptance gate: ten quantitative checks covering driving-noise
// correctness, the closed-form oracles, the simulated convergence rates,
// and output determinism.  Prints one pass/fail line per check and exits
// nonzero if any fails.  Every tolerance and budget is pinned here.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/fbm/kernel.hpp"
#include "mvfbm/fbm/sampler.hpp"
#include "mvfbm/fisher.hpp"
#include "mvfbm/harness.hpp"
#include "mvfbm/malliavin.hpp"
#include "mvfbm/mckean/model.hpp"
#include "mvfbm/mckean/solve.hpp"
#include "mvfbm/measure.hpp"
#include "mvfbm/rng.hpp"
#include "mvfbm/time_grid.hpp"

using namespace mvfbm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* spec, ...) {
    char buf[512];
    va_list args;
    va_start(args, spec);
    std::vsnprintf(buf, sizeof(buf), spec, args);
    va_end(args);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

// 1. Sample covariance of circulant-embedding paths against the closed
// form, three Hurst indices, 16-point grid, five standard errors.
Outcome fbm_covariance_criterion() {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n_paths = 10000;
    const TimeGrid grid = TimeGrid::uniform(1.0, 16);
    const std::size_t n = grid.n_steps();
    double worst_z = 0.0;
    for (double hv : {0.55, 0.7, 0.9}) {
        const fbm::HurstIndex h(hv);
        const fbm::FbmSampler sampler(h, grid);
        std::vector<std::vector<double>> paths(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i) {
            paths[i] = sampler.sample_path(
                7001, derive_stream(stream_purpose::kFbmPath, i));
        }
        for (std::size_t j = 1; j <= n; ++j) {
            for (std::size_t k = j; k <= n; ++k) {
                double acc = 0.0;
                for (const auto& p : paths) {
                    acc += p[j] * p[k];
                }
                const double sample = acc / static_cast<double>(n_paths);
                const double want =
                    fbm::fbm_covariance(h, grid.t(j), grid.t(k));
                const double rjj =
                    fbm::fbm_covariance(h, grid.t(j), grid.t(j));
                const double rkk =
                    fbm::fbm_covariance(h, grid.t(k), grid.t(k));
                const double se =
                    std::sqrt((rjj * rkk + want * want) /
                              static_cast<double>(n_paths));
                worst_z = std::max(worst_z, std::fabs(sample - want) / se);
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {worst_z < 5.0 && elapsed < 60.0,
            fmt("max entry deviation %.2f SE (limit 5), %.1f s (limit 60)",
                worst_z, elapsed)};
}

// 2. Squared-kernel identity int_0^t K(t,s)^2 ds = t^{2H}.
Outcome kernel_identity_criterion() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (double hv : {0.55, 0.7, 0.9}) {
        const fbm::HurstIndex h(hv);
        const auto k = [&](double t, double s) {
            return fbm::kernel_K(h, t, s);
        };
        for (double t : {0.25, 1.0}) {
            worst = std::max(worst, harness::kernel_identity_gap(h, t, k));
        }
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-3 && elapsed < 5.0,
            fmt("max relative gap %.2e (limit 1e-3), %.2f s (limit 5)",
                worst, elapsed)};
}

// Brute-force transport cost over all pairings, independent of the
// library's sorted coupling.
double brute_force_wasserstein(const std::vector<double>& a,
                               const std::vector<double>& b, double theta) {
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            acc += std::pow(std::fabs(a[i] - b[perm[i]]), theta);
        }
        best = std::min(best, acc / static_cast<double>(a.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best, 1.0 / theta);
}

// 3. Sorted coupling equals exhaustive search on small instances.
Outcome wasserstein_criterion() {
    RandomStream rng(7003, derive_stream(stream_purpose::kTest, 3));
    double worst = 0.0;
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t n = 2 + rng.next_u64() % 5;
        const double theta = 1.0 + 2.0 * rng.next_uniform();
        std::vector<double> a(n);
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = 3.0 * rng.next_normal();
            b[i] = 3.0 * rng.next_normal();
        }
        const double fast =
            wasserstein(EmpiricalMeasure(a), EmpiricalMeasure(b), theta);
        const double brute = brute_force_wasserstein(a, b, theta);
        worst = std::max(worst, std::fabs(fast - brute));
    }
    return {worst <= 1e-12,
            fmt("max |sorted - brute force| = %.2e over 200 instances "
                "(limit 1e-12)",
                worst)};
}

// 4. KDE Fisher estimate against the closed form on a shift/variance
// grid of normal targets.
Outcome fisher_oracle_criterion() {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = 100000;
    std::vector<double> draws(n);
    RandomStream rng(7004, derive_stream(stream_purpose::kTest, 4));
    rng.fill_normals(draws.data(), n);
    const fisher::SampleSet samples{draws, "std_normal"};
    double worst_excess = -1e300;
    for (double shift : {0.0, 0.5, 1.0}) {
        for (double ratio : {0.8, 1.0, 1.25}) {
            const double oracle =
                fisher::gaussian_fisher_oracle(0.0, 1.0, shift, ratio);
            const auto est = fisher::fisher_distance(samples, shift, ratio);
            const double allowed = std::max(0.15 * oracle, 0.05);
            worst_excess = std::max(
                worst_excess, std::fabs(est.value - oracle) - allowed);
        }
    }
    const double elapsed = seconds_since(start);
    return {worst_excess <= 0.0 && elapsed < 60.0,
            fmt("worst |estimate - oracle| is %.3f under the allowance, "
                "%.1f s (limit 60)",
                -worst_excess, elapsed)};
}

harness::ExperimentConfig base_run_config() {
    harness::ExperimentConfig cfg;
    cfg.model_id = "mf_ou";
    cfg.h_values = {0.7};
    cfg.t_end = 1.0;
    cfg.target_time = 1.0;
    cfg.n_steps = 512;
    cfg.n_particles = 2000;
    cfg.n_samples = 2000;
    return cfg;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
    std::vector<std::uint64_t> seeds(n);
    std::iota(seeds.begin(), seeds.end(), first);
    return seeds;
}

const std::vector<double> kDyadicGrid = {0.5,    0.25,     0.125,
                                         0.0625, 0.03125,  0.015625};
const std::vector<double> kUpperGrid = {0.70710678118654757, 0.5,
                                        0.35355339059327379, 0.25,
                                        0.17677669529663689, 0.125};

const harness::RateFit* find_fit(const harness::ExperimentResult& result,
                                 const char* quantity) {
    for (const auto& fit : result.fits) {
        if (fit.quantity == quantity) {
            return &fit;
        }
    }
    return nullptr;
}

// 5. Strong pathwise rate at the pinned budget: slope of
// log E[sup |X - x|^2] within 2H +/- 0.25 on the dyadic grid.
Outcome strong_rate_criterion(const harness::ExperimentResult& run,
                              double elapsed) {
    const auto* fit = find_fit(run, "strong_error_sq");
    if (fit == nullptr || fit->status != "ok") {
        return {false, "no usable fit"};
    }
    const double lo = 1.4 - 0.25;
    const double hi = 1.4 + 0.25;
    const bool in_band = fit->slope >= lo && fit->slope <= hi;
    return {in_band && run.ok() && elapsed < 600.0,
            fmt("slope %.4f (band [%.2f, %.2f]), %.0f s (limit 600)",
                fit->slope, lo, hi, elapsed)};
}

// 6. First and second moment gaps decay at the fluctuation order:
// slopes of log|Var Xt - Var Z| and log|mean Xt| within H +/- 0.3.
Outcome moment_rate_criterion(const harness::ExperimentResult& run) {
    const auto* var_fit = find_fit(run, "var_gap");
    const auto* mean_fit = find_fit(run, "mean_gap");
    if (var_fit == nullptr || mean_fit == nullptr ||
        var_fit->status != "ok" || mean_fit->status != "ok") {
        return {false, "no usable fit"};
    }
    const double lo = 0.7 - 0.3;
    const double hi = 0.7 + 0.3;
    const bool in_band = var_fit->slope >= lo && var_fit->slope <= hi &&
                         mean_fit->slope >= lo && mean_fit->slope <= hi;
    return {in_band && run.ok(),
            fmt("var slope %.4f, mean slope %.4f (band [%.2f, %.2f])",
                var_fit->slope, mean_fit->slope, lo, hi)};
}

// 7. Fisher-distance rate sandwich over the amplitudes that clear three
// times the matched-variance pure-noise floor: slope within 2H +/- 0.5.
Outcome fisher_rate_criterion(const harness::ExperimentResult& run) {
    const auto* fit = find_fit(run, "fisher");
    if (fit == nullptr) {
        return {false, "no fisher fit"};
    }
    if (fit->status != "ok") {
        return {false, "fit " + fit->status};
    }
    const double lo = 1.4 - 0.5;
    const double hi = 1.4 + 0.5;
    const bool in_band = fit->slope >= lo && fit->slope <= hi;
    return {in_band && run.ok(),
            fmt("slope %.4f over %zu gated amplitudes (band [%.2f, %.2f])",
                fit->slope, fit->points.size(), lo, hi)};
}

// 8. Malliavin closed forms on pure noise, and the constant-diffusion
// nondegeneracy value.
Outcome malliavin_criterion() {
    const fbm::HurstIndex h(0.7);
    const TimeGrid grid = TimeGrid::uniform(1.0, 512);
    const auto model = mckean::make_pure_noise();
    const double eps = 0.25;
    const auto ens = mckean::solve_particles(model, grid, 4, eps, h, 7008);
    const double eps_h = std::pow(eps, h.value());

    double worst_first = 0.0;
    for (double t : {0.5, 1.0}) {
        for (double r : {0.125, 0.25, 0.46875}) {
            const double got =
                malliavin::malliavin_first(model, ens, 0, r, t);
            const double want = eps_h * fbm::kernel_K(h, t, r);
            worst_first =
                std::max(worst_first, std::fabs(got - want) / want);
        }
    }

    double worst_theta = 0.0;
    for (double t : {0.5, 1.0}) {
        const auto th = malliavin::theta(model, ens, t);
        const double want = std::pow(t, 2.0 * h.value());
        worst_theta =
            std::max(worst_theta, std::fabs(th.value - want) / want);
    }

    const double nondec = malliavin::nondec_check(model, ens, 1.0, 17.0);
    const bool pass =
        worst_first < 1e-3 && worst_theta < 1e-3 && nondec == 1.0;
    return {pass,
            fmt("derivative gap %.2e, theta gap %.2e (limit 1e-3), "
                "nondegeneracy value %.17g (want 1 exactly)",
                worst_first, worst_theta, nondec)};
}

// 9. sqrt(fisher) >= tv - 2 SE on every cell of every run above.
Outcome fi_tv_criterion(
    const std::vector<const harness::ExperimentResult*>& runs) {
    std::size_t n_checks = 0;
    double worst = 1e300;
    bool pass = true;
    for (const auto* run : runs) {
        for (const auto& check : run->checks) {
            if (check.name.rfind("fi_tv:", 0) != 0) {
                continue;
            }
            ++n_checks;
            pass = pass && check.pass;
            double margin = 0.0;
            if (std::sscanf(check.detail.c_str(),
                            "min margin sqrt(fisher)-(tv-2se)=%lg",
                            &margin) == 1) {
                worst = std::min(worst, margin);
            }
        }
    }
    return {pass && n_checks > 0,
            fmt("holds across %zu run checks, min margin %.3g", n_checks,
                worst)};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

// 10. Byte-identical rates.csv and fits.json across repeated runs,
// including across worker-thread counts.
Outcome determinism_criterion() {
    harness::ExperimentConfig cfg = base_run_config();
    cfg.params = mckean::MfOuParams{1.0, 0.5, 0.3, 2.0, 1.2, 0.4, 1.0};
    cfg.epsilons = {0.5, 0.25, 0.125, 0.0625};
    cfg.n_steps = 64;
    cfg.n_particles = 300;
    cfg.n_samples = 600;
    cfg.seeds = seed_range(1, 3);

    const auto first = harness::run_rate_experiment(cfg, 1);
    const auto second = harness::run_rate_experiment(cfg, 2);
    namespace fs = std::filesystem;
    const fs::path dir_a = "acceptance_det_a";
    const fs::path dir_b = "acceptance_det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    harness::write_outputs(first, cfg, dir_a.string());
    harness::write_outputs(second, cfg, dir_b.string());
    bool same = true;
    for (const char* name : {"rates.csv", "fits.json"}) {
        same = same && slurp(dir_a / name) == slurp(dir_b / name);
    }
    return {same, same ? "rates.csv and fits.json byte-identical across "
                         "repeat runs (1 vs 2 workers)"
                       : "outputs differ between repeat runs"};
}

}  // namespace

int main() {
    int failed = 0;
    const auto report = [&](int idx, const char* name,
                            const Outcome& outcome) {
        std::printf("%s %2d. %s: %s\n", outcome.pass ? "PASS" : "FAIL", idx,
                    name, outcome.detail.c_str());
        if (!outcome.pass) {
            ++failed;
        }
        std::fflush(stdout);
    };
    const auto guarded = [](auto&& fn) -> Outcome {
        try {
            return fn();
        } catch (const std::exception& e) {
            return {false, std::string("exception: ") + e.what()};
        }
    };

    report(1, "fbm covariance", guarded(fbm_covariance_criterion));
    report(2, "kernel identity", guarded(kernel_identity_criterion));
    report(3, "wasserstein exactness", guarded(wasserstein_criterion));
    report(4, "gaussian fisher oracle", guarded(fisher_oracle_criterion));

    // The three rate runs; each also feeds the FI-TV criterion.
    harness::ExperimentResult strong_run;
    harness::ExperimentResult moment_run;
    harness::ExperimentResult fisher_run;
    double strong_elapsed = 0.0;

    report(5, "strong pathwise rate", guarded([&] {
        harness::ExperimentConfig cfg = base_run_config();
        cfg.params = mckean::MfOuParams{1.0, 0.5, 0.3, 2.0, 0.45, 0.3, 1.0};
        cfg.epsilons = kDyadicGrid;
        cfg.seeds = seed_range(1, 16);
        const auto start = std::chrono::steady_clock::now();
        strong_run = harness::run_rate_experiment(cfg);
        strong_elapsed = seconds_since(start);
        return strong_rate_criterion(strong_run, strong_elapsed);
    }));

    report(6, "moment gap rates", guarded([&] {
        harness::ExperimentConfig cfg = base_run_config();
        cfg.params = mckean::MfOuParams{1.0, 0.5, 0.3, 2.0, 1.2, 0.4, 1.0};
        cfg.epsilons = kUpperGrid;
        cfg.seeds = seed_range(1, 32);
        moment_run = harness::run_rate_experiment(cfg);
        return moment_rate_criterion(moment_run);
    }));

    report(7, "fisher rate sandwich", guarded([&] {
        harness::ExperimentConfig cfg = base_run_config();
        cfg.params = mckean::MfOuParams{1.0, 0.5, 0.3, 2.0, 1.5, 2.0, 1.0};
        cfg.epsilons = kUpperGrid;
        cfg.seeds = seed_range(1, 16);
        fisher_run = harness::run_rate_experiment(cfg);
        return fisher_rate_criterion(fisher_run);
    }));

    report(8, "malliavin closed forms", guarded(malliavin_criterion));
    report(9, "fisher-tv inequality", guarded([&] {
        return fi_tv_criterion({&strong_run, &moment_run, &fisher_run});
    }));
    report(10, "output determinism", guarded(determinism_criterion));

    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
