// Solvers for the interacting-particle system and its deterministic limit:
// Euler scheme for N particles coupled through their empirical measure and
// driven by independent fBm paths, RK4 for the zero-noise ODE.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/measure.hpp"
#include "mvfbm/mckean/model.hpp"
#include "mvfbm/time_grid.hpp"

namespace mvfbm::mckean {

struct OdePath {
    TimeGrid grid;
    std::vector<double> values;  // x_{t_k}, one per grid point

    double at(std::size_t k) const { return values[k]; }
    // Linear interpolation between grid points.
    double interpolate(double t) const;
};

struct ParticleEnsemble {
    TimeGrid grid;
    fbm::HurstIndex h;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::string model_id;
    std::size_t n_particles = 0;

    // Time-major particle states: states[k][i] is particle i at t_k.
    std::vector<std::vector<double>> states;
    // Driving fBm increments: driving[k][i] = B^{H,i}(t_{k+1}) - B^{H,i}(t_k).
    std::vector<std::vector<double>> driving;
    // Per-step measure history frozen by the solver: mean, stdev, and the
    // diffusion value actually used at step k.
    std::vector<double> mean_history;
    std::vector<double> stdev_history;
    std::vector<double> sigma_history;

    EmpiricalMeasure measure_at(std::size_t k) const {
        return EmpiricalMeasure(states.at(k));
    }
};

// Deterministic limit path: x' = b(t, x, delta_{x}), 4th-order Runge-Kutta.
// The point mass is replicated over measure_atoms atoms (semantics are
// unchanged; some callers want size-matched measures).
OdePath solve_ode(const CoefficientModel& model, const TimeGrid& grid,
                  std::size_t measure_atoms = 1);

// Interacting-particle Euler scheme:
//   X^i_{k+1} = X^i_k + b(t_k, X^i_k, mu^N_k) dt
//             + eps^H sigma(t_k, mu^N_k) (B^{H,i}_{t_{k+1}} - B^{H,i}_{t_k})
// with mu^N_k the empirical measure of all particles at step k, frozen per
// step.  Deterministic given (seed, grid, model); particles use
// independent driving paths derived from the seed.
ParticleEnsemble solve_particles(const CoefficientModel& model,
                                 const TimeGrid& grid,
                                 std::size_t n_particles, double epsilon,
                                 fbm::HurstIndex h, std::uint64_t seed);

// Normalized fluctuations (X^i_t - x_t) / eps^H at a grid time.
std::vector<double> fluctuation(const ParticleEnsemble& ensemble,
                                const OdePath& ode, double t);

// Trajectory dump, one row per (grid point, particle).
void write_trajectories_csv(const ParticleEnsemble& ensemble,
                            const std::string& path);

}  // namespace mvfbm::mckean
