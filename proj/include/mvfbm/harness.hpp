// Configuration-driven experiment runner.  Sweeps the noise amplitude
// grid against one or more Hurst indices, simulates the particle system
// next to its deterministic and Gaussian limit objects, estimates
// distribution distances, fits log-log decay rates, and writes
// machine-readable tables.  Every cell additionally runs a pure-noise
// control with the same budget, whose Fisher estimate measures the
// estimator floor that gates the Fisher rate fit.  Also hosts the
// consolidated validation suite exposed by the CLI.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/mckean/model.hpp"

namespace mvfbm::harness {

// Estimator knobs threaded through to the distance estimators.
struct EstimatorOverrides {
    // Kernel bandwidth for the Fisher estimator; 0 selects Silverman's
    // rule per sample set.
    double fisher_bandwidth = 0.0;
    // A cell enters the Fisher rate fit only where its estimate exceeds
    // this multiple of the pure-noise control at the same amplitude.
    double floor_multiplier = 3.0;
};

// One experiment: a coefficient model run on a grid of (H, epsilon)
// cells, replicated over the listed seeds.  Replicas share their seed
// across amplitudes, so the sweep sees common random numbers and the
// fitted decay is not drowned by independent Monte Carlo noise.
struct ExperimentConfig {
    std::string model_id = "mf_ou";
    mckean::MfOuParams params{1.0, 0.5, 0.3, 2.0, 1.5, 2.0, 1.0};
    std::vector<double> h_values{0.7};
    std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
    double t_end = 1.0;
    std::size_t n_steps = 512;
    std::size_t n_particles = 2000;
    // Reference draws of the limit Gaussian used by the total-variation
    // comparison in each cell.
    std::size_t n_samples = 100000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
    double target_time = 1.0;
    std::string out_dir = "out";
    EstimatorOverrides estimator;
};

// Strict parse of the JSON experiment document: unknown keys anywhere are
// rejected, all fields optional with the defaults above.  Throws
// ConfigError on malformed input or violated invariants (amplitudes in
// (0,1) strictly decreasing, target_time <= t_end, positive counts).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON echo of a config (parse(config_json(c)) == c).
std::string config_json(const ExperimentConfig& config);

// Ordinary least squares in log-log space.
struct RateFit {
    std::string quantity;
    double h = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;  // standard error of the slope
    double r_squared = 0.0;
    std::vector<std::array<double, 2>> points;  // (log eps, log value)
    std::string status = "ok";
};

// Fits y = slope * x + intercept over >= 4 points with distinct x;
// throws ConfigError otherwise.
RateFit fit_slope(const std::vector<std::array<double, 2>>& points);

struct CellValue {
    double h = 0.0;
    double epsilon = 0.0;
    double value = 0.0;
    double std_error = 0.0;  // replica spread / sqrt(replicas)
};

struct QuantityTable {
    std::string quantity;
    std::vector<CellValue> cells;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    std::vector<QuantityTable> tables;
    std::vector<RateFit> fits;
    std::vector<CheckResult> checks;
    std::vector<std::string> flags;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

// Runs the full sweep: per (H, epsilon, seed) cell simulates the
// ensemble, the coupled first-order process, and the pure-noise control,
// then aggregates replica statistics, fits per-quantity decay rates, and
// evaluates the report checks (monotone decay, control separation,
// Fisher-TV inequality, slope upper bound).  Cells run as a parallel map
// over n_jobs threads; results are reduced in cell order so the output is
// independent of scheduling.  A failing cell is recorded and excluded
// rather than aborting the sweep.
ExperimentResult run_rate_experiment(const ExperimentConfig& config,
                                     std::size_t n_jobs = 1);

// Writes rates.csv, fits.json, and report.json under out_dir (created if
// missing).  Output bytes depend only on config and result.
void write_outputs(const ExperimentResult& result,
                   const ExperimentConfig& config, const std::string& out_dir);

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_pass = true;
};

// Consolidated property checks across the library: RNG reproducibility,
// fBm covariance against the closed form (including the Brownian sanity
// limit), the squared-kernel identity plus its tampered-constant canary,
// Wasserstein exactness against brute force, the Gaussian Fisher oracle,
// estimator equivariance, limit-law and Malliavin closed forms on pure
// noise, and solver determinism on the configured model.
ValidationReport run_validation_suite(const ExperimentConfig& config);

std::string validation_json(const ValidationReport& report);

// Relative gap of the identity int_0^t k(t,s)^2 ds = t^{2H}.  The kernel
// is injectable so the suite can demonstrate the check detects a wrong
// normalization constant.
double kernel_identity_gap(fbm::HurstIndex h, double t,
                           const std::function<double(double, double)>& kernel);

}  // namespace mvfbm::harness
