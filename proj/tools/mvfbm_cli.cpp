// Command-line front end: runs the configured rate experiment, executes
// the validation suite, or evaluates the closed-form Gaussian Fisher
// oracle.  Exit codes: 0 success, 1 configuration error, 2 numerical
// failure, 3 validation failure.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvfbm/errors.hpp"
#include "mvfbm/fisher.hpp"
#include "mvfbm/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitValidation = 3;

void print_summary(const mvfbm::harness::ExperimentResult& result,
                   const std::string& out_dir) {
    std::printf("fits:\n");
    for (const auto& fit : result.fits) {
        if (fit.status == "ok") {
            std::printf("  %-16s H=%-5g slope %+.4f +/- %.4f  (R^2 %.4f)\n",
                        fit.quantity.c_str(), fit.h, fit.slope, fit.std_error,
                        fit.r_squared);
        } else {
            std::printf("  %-16s H=%-5g %s\n", fit.quantity.c_str(), fit.h,
                        fit.status.c_str());
        }
    }
    std::size_t passed = 0;
    for (const auto& check : result.checks) {
        if (check.pass) {
            ++passed;
        } else {
            std::printf("check failed: %s (%s)\n", check.name.c_str(),
                        check.detail.c_str());
        }
    }
    std::printf("checks: %zu of %zu passed\n", passed, result.checks.size());
    for (const auto& flag : result.flags) {
        std::printf("flag: %s\n", flag.c_str());
    }
    for (const auto& failure : result.failures) {
        std::printf("cell failed: %s\n", failure.c_str());
    }
    std::printf("wrote %s/rates.csv, %s/fits.json, %s/report.json\n",
                out_dir.c_str(), out_dir.c_str(), out_dir.c_str());
}

int run_command(const std::string& config_path, const std::string& out_dir,
                std::size_t jobs, bool seed_given, std::uint64_t seed) {
    mvfbm::harness::ExperimentConfig cfg =
        mvfbm::harness::load_config(config_path);
    if (!out_dir.empty()) {
        cfg.out_dir = out_dir;
    }
    if (seed_given) {
        // Keep the replica count, reseed the streams deterministically.
        const std::size_t replicas = cfg.seeds.size();
        cfg.seeds.clear();
        for (std::size_t i = 0; i < replicas; ++i) {
            cfg.seeds.push_back(seed + i);
        }
    }
    const mvfbm::harness::ExperimentResult result =
        mvfbm::harness::run_rate_experiment(cfg, jobs);
    mvfbm::harness::write_outputs(result, cfg, cfg.out_dir);
    print_summary(result, cfg.out_dir);
    return result.ok() ? kExitOk : kExitNumerical;
}

int validate_command(const std::string& config_path) {
    const mvfbm::harness::ExperimentConfig cfg =
        mvfbm::harness::load_config(config_path);
    const mvfbm::harness::ValidationReport report =
        mvfbm::harness::run_validation_suite(cfg);
    std::printf("%s\n", mvfbm::harness::validation_json(report).c_str());
    return report.all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Small-noise distribution-dependent SDE rate experiments under "
        "fractional driving noise"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;

    CLI::App* run = app.add_subcommand(
        "run", "Run the configured amplitude sweep and write rate tables");
    run->add_option("--config", config_path, "Experiment JSON document")
        ->required();
    run->add_option("--out", out_dir,
                    "Output directory (overrides the config's out_dir)");
    run->add_option("--jobs", jobs, "Worker threads for the cell sweep")
        ->check(CLI::PositiveNumber);
    CLI::Option* seed_opt = run->add_option(
        "--seed", seed,
        "Replace the configured seed list with this many consecutive "
        "seeds starting here");

    CLI::App* validate = app.add_subcommand(
        "validate", "Run the cross-module validation suite and print JSON");
    validate->add_option("--config", config_path, "Experiment JSON document")
        ->required();

    CLI::App* oracle =
        app.add_subcommand("oracle", "Closed-form reference values");
    oracle->require_subcommand(1);
    double mu1 = 0.0;
    double var1 = 1.0;
    double mu2 = 0.0;
    double var2 = 1.0;
    CLI::App* gaussian_fisher = oracle->add_subcommand(
        "gaussian-fisher",
        "Relative Fisher information between two normal laws");
    gaussian_fisher->add_option("--mu1", mu1, "Mean of the first law")
        ->required();
    gaussian_fisher->add_option("--var1", var1, "Variance of the first law")
        ->required()
        ->check(CLI::PositiveNumber);
    gaussian_fisher->add_option("--mu2", mu2, "Mean of the second law")
        ->required();
    gaussian_fisher->add_option("--var2", var2, "Variance of the second law")
        ->required()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand(run)) {
            return run_command(config_path, out_dir, jobs,
                               seed_opt->count() > 0, seed);
        }
        if (app.got_subcommand(validate)) {
            return validate_command(config_path);
        }
        std::printf("%.17g\n",
                    mvfbm::fisher::gaussian_fisher_oracle(mu1, var1, mu2,
                                                          var2));
        return kExitOk;
    } catch (const mvfbm::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const mvfbm::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return kExitNumerical;
    }
}
