// Exact sampling of fractional Brownian motion on a time grid.
//
// Uniform grids use circulant embedding of the unit-spacing increment
// covariance, with the path recovered through the self-similarity scaling
// dt^H.  If the embedding spectrum has a materially negative eigenvalue, or
// the grid is non-uniform, sampling falls back to a dense Cholesky factor of
// the increment covariance.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mvfbm/fbm/hurst.hpp"
#include "mvfbm/time_grid.hpp"

namespace mvfbm::fbm {

struct FbmDiagnostics {
    bool used_circulant = false;
    // Smallest eigenvalue of the circulant spectrum, relative to the largest.
    // Zero when the Cholesky route is used.
    double min_eigenvalue_ratio = 0.0;
    // Circulant embedding length (zero when the Cholesky route is used).
    std::size_t embedding_size = 0;
};

class FbmSampler {
public:
    FbmSampler(HurstIndex h, TimeGrid grid);
    ~FbmSampler();

    FbmSampler(const FbmSampler&) = delete;
    FbmSampler& operator=(const FbmSampler&) = delete;

    // Increments db[k] = B(t_{k+1}) - B(t_k), one per grid cell.
    std::vector<double> sample_increments(std::uint64_t seed,
                                          std::uint64_t stream) const;

    // Path values at the grid points, starting from b[0] = 0.
    std::vector<double> sample_path(std::uint64_t seed,
                                    std::uint64_t stream) const;

    const FbmDiagnostics& diagnostics() const { return diag_; }
    const TimeGrid& grid() const { return grid_; }
    HurstIndex hurst() const { return h_; }

private:
    struct Fft;

    std::vector<double> circulant_increments(std::uint64_t seed,
                                             std::uint64_t stream) const;
    std::vector<double> cholesky_increments(std::uint64_t seed,
                                            std::uint64_t stream) const;

    HurstIndex h_;
    TimeGrid grid_;
    FbmDiagnostics diag_;

    // Circulant route state: eigenvalues of the embedding (length m_).
    std::size_t m_ = 0;
    std::vector<double> lambda_;
    std::unique_ptr<Fft> fft_;

    // Cholesky route state: lower-triangular factor of the increment
    // covariance, row-major packed.
    std::vector<double> chol_;
};

// Unit-spacing fractional Gaussian noise autocovariance
//   gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2.
double fgn_autocovariance(HurstIndex h, std::size_t k);

// In-place Cholesky factorization of a dense SPD matrix (row-major, n x n).
// Retries once with a small diagonal jitter, then reports failure.
void cholesky_factor(std::vector<double>& a, std::size_t n);

}  // namespace mvfbm::fbm
