// Rate-experiment driver: simulates every (H, epsilon, seed) cell next to
// a pure-noise control at the same budget, aggregates replica statistics,
// fits log-log decay rates, and evaluates the report checks.
#include "mvfbm/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "mvfbm/errors.hpp"
#include "mvfbm/fisher.hpp"
#include "mvfbm/mckean/limit.hpp"
#include "mvfbm/mckean/solve.hpp"
#include "mvfbm/rng.hpp"
#include "mvfbm/simd/ops.hpp"
#include "mvfbm/time_grid.hpp"

namespace mvfbm::harness {

namespace {

using json = nlohmann::ordered_json;

// Squared-error diagnostics of order-one states bottom out at double
// rounding noise (~1e-32); below this level a value carries no rate
// information, so fits and monotonicity checks ignore it.
constexpr double kValueFloor = 1e-28;

// Quantities in report order; the first five carry rate fits.
const char* const kFitQuantities[] = {"fisher", "var_gap", "mean_gap",
                                      "strong_error_sq", "u_residual_sq"};
const char* const kAllQuantities[] = {"fisher",          "var_gap",
                                      "mean_gap",        "strong_error_sq",
                                      "u_residual_sq",   "tv",
                                      "fisher_floor",    "tv_floor"};

struct CellOut {
    bool failed = false;
    std::string error;
    bool unreliable = false;
    double fisher = 0.0;
    double tv = 0.0;
    double mean_signed = 0.0;
    double var_value = 0.0;
    double strong_sq = 0.0;
    double u_resid_sq = 0.0;
    double fisher_floor = 0.0;
    double tv_floor = 0.0;
};

struct Agg {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

Agg aggregate(const std::vector<double>& v) {
    Agg a;
    a.n = v.size();
    if (v.empty()) {
        return a;
    }
    for (double x : v) {
        a.mean += x;
    }
    a.mean /= static_cast<double>(a.n);
    if (a.n > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - a.mean) * (x - a.mean);
        }
        a.se = std::sqrt(ss / (static_cast<double>(a.n) *
                               static_cast<double>(a.n - 1)));
    }
    return a;
}

void parallel_map(std::size_t n_jobs, std::size_t n_cells,
                  const std::function<void(std::size_t)>& work) {
    if (n_jobs <= 1 || n_cells <= 1) {
        for (std::size_t i = 0; i < n_cells; ++i) {
            work(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n_cells;
             i = next.fetch_add(1)) {
            work(i);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t k = std::min(n_jobs, n_cells);
    pool.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
}

mckean::CoefficientModel make_model(const ExperimentConfig& cfg) {
    if (cfg.model_id == "pure_noise") {
        return mckean::make_pure_noise();
    }
    return mckean::make_mf_ou(cfg.params);
}

CellOut compute_cell(const ExperimentConfig& cfg,
                     const mckean::CoefficientModel& model,
                     const mckean::CoefficientModel& control,
                     const mckean::OdePath& ode_main,
                     const mckean::OdePath& ode_ctrl, const TimeGrid& grid,
                     double varz_main, double varz_ctrl, std::size_t h_idx,
                     double eps, std::uint64_t seed) {
    CellOut out;
    const fbm::HurstIndex h(cfg.h_values[h_idx]);
    const double t = cfg.target_time;
    const std::size_t k_t = grid.index_of(t);
    const auto& ops = simd::ops();

    // Shared standard-normal block, scaled to each target variance below.
    std::vector<double> z(cfg.n_samples);
    RandomStream ref_rng(seed,
                         derive_stream(stream_purpose::kGaussianReference,
                                       static_cast<std::uint64_t>(h_idx)));
    ref_rng.fill_normals(z.data(), z.size());

    {
        const auto ens =
            mckean::solve_particles(model, grid, cfg.n_particles, eps, h,
                                    seed);
        const auto flu = mckean::fluctuation(ens, ode_main, t);
        const std::size_t n = flu.size();
        const double dn = static_cast<double>(n);
        out.mean_signed = ops.sum(flu.data(), n) / dn;
        out.var_value =
            ops.sum_sq_dev(flu.data(), n, out.mean_signed) / dn;

        std::vector<double> sup(n, 0.0);
        for (std::size_t k = 0; k <= k_t; ++k) {
            ops.max_abs_dev_update(sup.data(), ens.states[k].data(), n,
                                   ode_main.values[k]);
        }
        out.strong_sq = ops.dot(sup.data(), sup.data(), n) / dn;

        const auto u = mckean::simulate_U(model, ens, ode_main, t);
        out.u_resid_sq = ops.sum_sq_diff(flu.data(), u.data(), n) / dn;

        const fisher::SampleSet xt{flu, "x_tilde"};
        const auto fe = fisher::fisher_distance(
            xt, 0.0, varz_main, cfg.estimator.fisher_bandwidth);
        out.fisher = fe.value;
        out.unreliable = !fe.reliable;

        fisher::SampleSet ref{z, "limit_reference"};
        const double sd = std::sqrt(varz_main);
        for (double& x : ref.values) {
            x *= sd;
        }
        out.tv = fisher::tv_distance(xt, ref);
    }

    {
        const auto ens =
            mckean::solve_particles(control, grid, cfg.n_particles, eps, h,
                                    seed);
        const auto flu = mckean::fluctuation(ens, ode_ctrl, t);
        const fisher::SampleSet xc{flu, "control_x_tilde"};
        const auto fc = fisher::fisher_distance(
            xc, 0.0, varz_ctrl, cfg.estimator.fisher_bandwidth);
        out.fisher_floor = fc.value;

        fisher::SampleSet ref{z, "control_reference"};
        const double sd = std::sqrt(varz_ctrl);
        for (double& x : ref.values) {
            x *= sd;
        }
        out.tv_floor = fisher::tv_distance(xc, ref);
    }
    return out;
}

std::string cell_tag(double hv, double eps, std::uint64_t seed) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "h=%g eps=%g seed=%llu", hv, eps,
                  static_cast<unsigned long long>(seed));
    return buf;
}

const QuantityTable& table_of(const ExperimentResult& result,
                              const char* quantity) {
    for (const auto& t : result.tables) {
        if (t.quantity == quantity) {
            return t;
        }
    }
    throw NumericalError(std::string("missing quantity table ") + quantity);
}

std::vector<const CellValue*> cells_for_h(const QuantityTable& table,
                                          double hv) {
    std::vector<const CellValue*> out;
    for (const auto& c : table.cells) {
        if (c.h == hv) {
            out.push_back(&c);
        }
    }
    return out;
}

}  // namespace

RateFit fit_slope(const std::vector<std::array<double, 2>>& points) {
    if (points.size() < 4) {
        throw ConfigError("fit_slope: need at least 4 points");
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& p : points) {
        mx += p[0];
        my += p[1];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& p : points) {
        const double dx = p[0] - mx;
        const double dy = p[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw ConfigError("fit_slope: abscissae are degenerate");
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (const auto& p : points) {
        const double r = p[1] - (fit.intercept + fit.slope * p[0]);
        ssr += r * r;
    }
    fit.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    fit.points = points;
    return fit;
}

ExperimentResult run_rate_experiment(const ExperimentConfig& cfg,
                                     std::size_t n_jobs) {
    const TimeGrid grid = TimeGrid::uniform(cfg.t_end, cfg.n_steps);
    grid.index_of(cfg.target_time);  // target_time must be a grid time

    const auto model = make_model(cfg);
    const auto ode_main = mckean::solve_ode(model, grid);

    const std::size_t n_h = cfg.h_values.size();
    const std::size_t n_e = cfg.epsilons.size();
    const std::size_t n_r = cfg.seeds.size();

    // The control is the null law of each cell's Fisher comparison: pure
    // noise whose limit variance matches the main model's, so the measured
    // floor sits at the same scale as the main estimate (the estimator is
    // 1/variance-equivariant).  Its constant diffusion depends on H.
    std::vector<double> varz_main(n_h);
    std::vector<mckean::CoefficientModel> controls;
    controls.reserve(n_h);
    for (std::size_t i = 0; i < n_h; ++i) {
        const fbm::HurstIndex h(cfg.h_values[i]);
        varz_main[i] =
            mckean::limit_law(model, ode_main, cfg.target_time, h).variance;
        const double sigma_c = std::sqrt(varz_main[i]) /
                               std::pow(cfg.target_time, h.value());
        controls.push_back(mckean::make_pure_noise(sigma_c));
    }
    const std::vector<double>& varz_ctrl = varz_main;
    const auto ode_ctrl = mckean::solve_ode(controls.front(), grid);

    std::vector<CellOut> cells(n_h * n_e * n_r);
    parallel_map(n_jobs, cells.size(), [&](std::size_t idx) {
        const std::size_t h_idx = idx / (n_e * n_r);
        const std::size_t e_idx = (idx / n_r) % n_e;
        const std::size_t r_idx = idx % n_r;
        try {
            cells[idx] = compute_cell(cfg, model, controls[h_idx], ode_main,
                                      ode_ctrl, grid, varz_main[h_idx],
                                      varz_ctrl[h_idx], h_idx,
                                      cfg.epsilons[e_idx], cfg.seeds[r_idx]);
        } catch (const std::exception& e) {
            cells[idx].failed = true;
            cells[idx].error =
                cell_tag(cfg.h_values[h_idx], cfg.epsilons[e_idx],
                         cfg.seeds[r_idx]) +
                ": " + e.what();
        }
    });

    ExperimentResult result;
    for (const char* q : kAllQuantities) {
        result.tables.push_back({q, {}});
    }

    for (std::size_t h_idx = 0; h_idx < n_h; ++h_idx) {
        for (std::size_t e_idx = 0; e_idx < n_e; ++e_idx) {
            std::vector<double> fisher_v, tv_v, mean_v, var_v, strong_v,
                ures_v, floor_v, tvf_v;
            for (std::size_t r_idx = 0; r_idx < n_r; ++r_idx) {
                const CellOut& c =
                    cells[(h_idx * n_e + e_idx) * n_r + r_idx];
                if (c.failed) {
                    result.failures.push_back(c.error);
                    continue;
                }
                if (c.unreliable) {
                    result.flags.push_back(
                        "fisher estimate clipped beyond 20% at " +
                        cell_tag(cfg.h_values[h_idx], cfg.epsilons[e_idx],
                                 cfg.seeds[r_idx]));
                }
                fisher_v.push_back(c.fisher);
                tv_v.push_back(c.tv);
                mean_v.push_back(c.mean_signed);
                var_v.push_back(c.var_value);
                strong_v.push_back(c.strong_sq);
                ures_v.push_back(c.u_resid_sq);
                floor_v.push_back(c.fisher_floor);
                tvf_v.push_back(c.tv_floor);
            }
            if (fisher_v.empty()) {
                continue;  // every replica of this cell failed
            }
            const double hv = cfg.h_values[h_idx];
            const double eps = cfg.epsilons[e_idx];
            auto push = [&](const char* q, double value, double se) {
                for (auto& t : result.tables) {
                    if (t.quantity == q) {
                        t.cells.push_back({hv, eps, value, se});
                        return;
                    }
                }
            };
            const Agg af = aggregate(fisher_v);
            push("fisher", af.mean, af.se);
            const Agg av = aggregate(var_v);
            push("var_gap", std::fabs(av.mean - varz_main[h_idx]), av.se);
            const Agg am = aggregate(mean_v);
            push("mean_gap", std::fabs(am.mean), am.se);
            const Agg as = aggregate(strong_v);
            push("strong_error_sq", as.mean, as.se);
            const Agg au = aggregate(ures_v);
            push("u_residual_sq", au.mean, au.se);
            const Agg at = aggregate(tv_v);
            push("tv", at.mean, at.se);
            const Agg afl = aggregate(floor_v);
            push("fisher_floor", afl.mean, afl.se);
            const Agg atf = aggregate(tvf_v);
            push("tv_floor", atf.mean, atf.se);
        }
    }

    // Rate fits per quantity and H.  The Fisher fit is restricted to the
    // amplitude sub-grid where the estimate clears the control floor by
    // the configured multiplier.
    for (std::size_t h_idx = 0; h_idx < n_h; ++h_idx) {
        const double hv = cfg.h_values[h_idx];
        const auto floor_cells = cells_for_h(table_of(result, "fisher_floor"),
                                             hv);
        for (const char* q : kFitQuantities) {
            const auto qcells = cells_for_h(table_of(result, q), hv);
            std::vector<std::array<double, 2>> pts;
            for (const auto* c : qcells) {
                if (!(c->value > kValueFloor)) {
                    continue;
                }
                if (std::string(q) == "fisher") {
                    const CellValue* fl = nullptr;
                    for (const auto* f : floor_cells) {
                        if (f->epsilon == c->epsilon) {
                            fl = f;
                            break;
                        }
                    }
                    if (fl == nullptr ||
                        !(c->value >
                          cfg.estimator.floor_multiplier * fl->value)) {
                        continue;
                    }
                }
                pts.push_back({std::log(c->epsilon), std::log(c->value)});
            }
            RateFit fit;
            if (pts.size() >= 4) {
                fit = fit_slope(pts);
            } else {
                fit.points = pts;
                fit.status = std::string(q) == "fisher"
                                 ? "degenerate: distance at estimator floor"
                                 : "degenerate: value at machine floor";
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%s fit at H=%g: %s", q, hv,
                              fit.status.c_str());
                result.flags.push_back(buf);
            }
            fit.quantity = q;
            fit.h = hv;
            result.fits.push_back(fit);
        }
    }

    // Report checks.
    char buf[256];
    for (std::size_t h_idx = 0; h_idx < n_h; ++h_idx) {
        const double hv = cfg.h_values[h_idx];

        for (const char* q :
             {"var_gap", "mean_gap", "strong_error_sq", "u_residual_sq"}) {
            auto qcells = cells_for_h(table_of(result, q), hv);
            std::erase_if(qcells, [](const CellValue* c) {
                return !(c->value > kValueFloor);
            });
            std::size_t inversions = 0;
            for (std::size_t i = 1; i < qcells.size(); ++i) {
                if (qcells[i]->value > qcells[i - 1]->value) {
                    ++inversions;
                    std::snprintf(buf, sizeof(buf),
                                  "monotone inversion (MC noise) in %s at "
                                  "H=%g, eps=%g",
                                  q, hv, qcells[i]->epsilon);
                    result.flags.push_back(buf);
                }
            }
            std::snprintf(buf, sizeof(buf), "monotone:%s:H=%g", q, hv);
            std::string name = buf;
            std::snprintf(buf, sizeof(buf), "inversions=%zu (one allowed)",
                          inversions);
            result.checks.push_back({name, inversions <= 1, buf});
        }

        if (cfg.model_id == "pure_noise") {
            std::snprintf(buf, sizeof(buf), "control_separation:H=%g", hv);
            result.checks.push_back(
                {buf, true, "main model is the control law; not applicable"});
        } else {
            const auto main_cells =
                cells_for_h(table_of(result, "fisher"), hv);
            const auto floor_cells =
                cells_for_h(table_of(result, "fisher_floor"), hv);
            bool pass = !main_cells.empty();
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0;
                 i < main_cells.size() && i < floor_cells.size(); ++i) {
                // Statistical reading: the control may tie the main
                // estimate within noise (weak coupling sits at the floor)
                // but must never sit significantly above it.
                const double slack =
                    2.0 * std::sqrt(main_cells[i]->std_error *
                                        main_cells[i]->std_error +
                                    floor_cells[i]->std_error *
                                        floor_cells[i]->std_error);
                const double margin = main_cells[i]->value + slack -
                                      floor_cells[i]->value;
                worst = std::min(worst, margin);
                if (!(margin > 0.0)) {
                    pass = false;
                }
            }
            std::snprintf(buf, sizeof(buf), "control_separation:H=%g", hv);
            std::string name = buf;
            std::snprintf(buf, sizeof(buf),
                          "min margin fisher+2se-floor=%.3g (need > 0)",
                          worst);
            result.checks.push_back({name, pass, buf});
        }

        {
            bool pass = true;
            std::string detail = "no fit (degenerate)";
            for (const auto& fit : result.fits) {
                if (fit.quantity == "fisher" && fit.h == hv &&
                    fit.status == "ok") {
                    const double limit = 2.0 * hv + 0.5;
                    pass = fit.slope <= limit;
                    std::snprintf(buf, sizeof(buf),
                                  "slope=%.4g, upper limit=%.4g", fit.slope,
                                  limit);
                    detail = buf;
                }
            }
            std::snprintf(buf, sizeof(buf), "lower_bound_direction:H=%g",
                          hv);
            result.checks.push_back({buf, pass, detail});
        }

        {
            bool pass = true;
            double worst = std::numeric_limits<double>::infinity();
            const struct {
                const char* dist;
                const char* tv;
            } pairs[] = {{"fisher", "tv"}, {"fisher_floor", "tv_floor"}};
            for (const auto& pr : pairs) {
                const auto fc = cells_for_h(table_of(result, pr.dist), hv);
                const auto tc = cells_for_h(table_of(result, pr.tv), hv);
                for (std::size_t i = 0; i < fc.size() && i < tc.size();
                     ++i) {
                    const double lhs =
                        std::sqrt(std::max(fc[i]->value, 0.0));
                    const double rhs =
                        tc[i]->value - 2.0 * tc[i]->std_error;
                    worst = std::min(worst, lhs - rhs);
                    if (!(lhs >= rhs)) {
                        pass = false;
                    }
                }
            }
            std::snprintf(buf, sizeof(buf), "fi_tv:H=%g", hv);
            std::string name = buf;
            std::snprintf(buf, sizeof(buf),
                          "min margin sqrt(fisher)-(tv-2se)=%.3g", worst);
            result.checks.push_back({name, pass, buf});
        }
    }

    return result;
}

void write_outputs(const ExperimentResult& result,
                   const ExperimentConfig& config,
                   const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream csv(fs::path(out_dir) / "rates.csv");
        if (!csv) {
            throw ConfigError("write_outputs: cannot write rates.csv in " +
                              out_dir);
        }
        csv << "quantity,H,epsilon,value,stderr\n";
        char line[256];
        for (const auto& table : result.tables) {
            for (const auto& c : table.cells) {
                std::snprintf(line, sizeof(line),
                              "%s,%.17g,%.17g,%.17g,%.17g\n",
                              table.quantity.c_str(), c.h, c.epsilon,
                              c.value, c.std_error);
                csv << line;
            }
        }
    }

    json fits = json::array();
    for (const auto& fit : result.fits) {
        json pts = json::array();
        for (const auto& p : fit.points) {
            pts.push_back({p[0], p[1]});
        }
        fits.push_back({{"quantity", fit.quantity},
                        {"h", fit.h},
                        {"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"stderr", fit.std_error},
                        {"r_squared", fit.r_squared},
                        {"points", pts},
                        {"status", fit.status}});
    }
    {
        std::ofstream out(fs::path(out_dir) / "fits.json");
        if (!out) {
            throw ConfigError("write_outputs: cannot write fits.json in " +
                              out_dir);
        }
        out << fits.dump(2) << '\n';
    }

    json report;
    report["config"] = json::parse(config_json(config));
    json tables;
    for (const auto& table : result.tables) {
        json rows = json::array();
        for (const auto& c : table.cells) {
            rows.push_back({{"h", c.h},
                            {"epsilon", c.epsilon},
                            {"value", c.value},
                            {"stderr", c.std_error}});
        }
        tables[table.quantity] = rows;
    }
    report["tables"] = tables;
    report["fits"] = fits;
    json checks = json::array();
    for (const auto& c : result.checks) {
        checks.push_back(
            {{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    report["checks"] = checks;
    report["flags"] = result.flags;
    report["failures"] = result.failures;
    report["status"] = result.ok() ? "ok" : "partial";
    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) {
            throw ConfigError("write_outputs: cannot write report.json in " +
                              out_dir);
        }
        out << report.dump(2) << '\n';
    }
}

}  // namespace mvfbm::harness
