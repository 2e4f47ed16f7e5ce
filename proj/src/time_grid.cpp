#include "mvfbm/time_grid.hpp"

#include <cmath>
#include <string>

#include "mvfbm/errors.hpp"

namespace mvfbm {

TimeGrid TimeGrid::uniform(double t_end, std::size_t n_steps) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ConfigError("TimeGrid: t_end must be positive and finite");
    }
    if (n_steps == 0) {
        throw ConfigError("TimeGrid: n_steps must be positive");
    }
    std::vector<double> times(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        times[i] = t_end * static_cast<double>(i) / static_cast<double>(n_steps);
    }
    TimeGrid grid(std::move(times));
    grid.uniform_ = true;
    return grid;
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) {
        throw ConfigError("TimeGrid: need at least two time points");
    }
    if (times_.front() != 0.0) {
        throw ConfigError("TimeGrid: grid must start at t = 0");
    }
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
        if (!(times_[i + 1] > times_[i]) || !std::isfinite(times_[i + 1])) {
            throw ConfigError("TimeGrid: times must be strictly increasing");
        }
    }
    // Uniformity detection with a relative tolerance; only exact uniform
    // construction guarantees the fast paths, but round-tripped grids count.
    const double dt0 = times_[1] - times_[0];
    uniform_ = true;
    for (std::size_t i = 1; i + 1 < times_.size(); ++i) {
        if (std::fabs((times_[i + 1] - times_[i]) - dt0) > 1e-12 * dt0) {
            uniform_ = false;
            break;
        }
    }
}

std::size_t TimeGrid::index_of(double t, double tol) const {
    const std::size_t k = cell_index(t);
    if (std::fabs(times_[k] - t) <= tol) {
        return k;
    }
    if (k + 1 < times_.size() && std::fabs(times_[k + 1] - t) <= tol) {
        return k + 1;
    }
    throw ConfigError("TimeGrid: t = " + std::to_string(t) +
                      " is not a grid point");
}

std::size_t TimeGrid::cell_index(double t) const {
    if (t < 0.0 || t > times_.back() * (1.0 + 1e-12)) {
        throw ConfigError("TimeGrid: t outside [0, t_end]");
    }
    // Binary search for the last index with t_k <= t.
    std::size_t lo = 0;
    std::size_t hi = times_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (times_[mid] <= t) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

}  // namespace mvfbm
