#include "mvfbm/fbm/sampler.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/kernel.hpp"
#include "mvfbm/rng.hpp"

namespace mvfbm::fbm {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr std::size_t kMaxCholeskyDim = 2048;

}  // namespace

struct FbmSampler::Fft {
    fftw_plan plan = nullptr;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t m = 0;

    explicit Fft(std::size_t m_) : m(m_) {
        in = fftw_alloc_complex(m);
        out = fftw_alloc_complex(m);
        if (in == nullptr || out == nullptr) {
            throw NumericalError("fbm: fft buffer allocation failed");
        }
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(m), in, out, FFTW_FORWARD,
                                FFTW_ESTIMATE);
        if (plan == nullptr) {
            throw NumericalError("fbm: fft planning failed");
        }
    }

    ~Fft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (plan != nullptr) {
            fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }
};

double fgn_autocovariance(HurstIndex h, std::size_t k) {
    const double two_h = 2.0 * h.value();
    const double kd = static_cast<double>(k);
    return 0.5 * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) +
                  std::pow(std::fabs(kd - 1.0), two_h));
}

void cholesky_factor(std::vector<double>& a, std::size_t n) {
    if (a.size() != n * n) {
        throw ConfigError("cholesky: matrix size mismatch");
    }
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_diag = std::max(max_diag, a[i * n + i]);
    }
    const std::vector<double> saved = a;
    for (int attempt = 0; attempt < 2; ++attempt) {
        bool ok = true;
        if (attempt == 1) {
            a = saved;
            const double jitter = 1e-12 * max_diag;
            for (std::size_t i = 0; i < n; ++i) {
                a[i * n + i] += jitter;
            }
        }
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = a[i * n + j];
                for (std::size_t k = 0; k < j; ++k) {
                    sum -= a[i * n + k] * a[j * n + k];
                }
                if (i == j) {
                    if (!(sum > 0.0)) {
                        ok = false;
                        break;
                    }
                    a[i * n + i] = std::sqrt(sum);
                } else {
                    a[i * n + j] = sum / a[j * n + j];
                }
            }
        }
        if (ok) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    a[i * n + j] = 0.0;
                }
            }
            return;
        }
    }
    throw NumericalError("cholesky: matrix is not positive definite");
}

FbmSampler::FbmSampler(HurstIndex h, TimeGrid grid)
    : h_(h), grid_(std::move(grid)) {
    const std::size_t n = grid_.n_steps();
    if (n == 0) {
        throw ConfigError("fbm: grid must have at least one cell");
    }

    if (grid_.is_uniform()) {
        // Circulant embedding of the unit-spacing increment covariance.
        std::size_t m = 1;
        while (m < 2 * (n > 1 ? n - 1 : 1)) {
            m <<= 1;
        }
        m = std::max<std::size_t>(m, 2);
        m_ = m;

        fft_ = std::make_unique<Fft>(m);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = std::min(j, m - j);
            fft_->in[j][0] = fgn_autocovariance(h_, k);
            fft_->in[j][1] = 0.0;
        }
        fftw_execute(fft_->plan);

        lambda_.resize(m);
        double max_lambda = 0.0;
        double min_lambda = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            lambda_[j] = fft_->out[j][0];
            max_lambda = std::max(max_lambda, lambda_[j]);
            min_lambda = std::min(min_lambda, lambda_[j]);
        }
        const double ratio = max_lambda > 0.0 ? min_lambda / max_lambda : -1.0;
        diag_.min_eigenvalue_ratio = ratio;
        if (ratio >= -1e-10) {
            for (double& l : lambda_) {
                l = std::max(l, 0.0);
            }
            diag_.used_circulant = true;
            diag_.embedding_size = m;
            return;
        }
        // Materially indefinite embedding: fall through to Cholesky.
        fft_.reset();
        lambda_.clear();
        m_ = 0;
    }

    if (n > kMaxCholeskyDim) {
        throw ConfigError("fbm: non-uniform grids support at most 2048 cells");
    }
    std::vector<double> cov(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a0 = grid_.t(i);
            const double a1 = grid_.t(i + 1);
            const double b0 = grid_.t(j);
            const double b1 = grid_.t(j + 1);
            cov[i * n + j] = fbm_covariance(h_, a1, b1) -
                             fbm_covariance(h_, a1, b0) -
                             fbm_covariance(h_, a0, b1) +
                             fbm_covariance(h_, a0, b0);
        }
    }
    cholesky_factor(cov, n);
    chol_ = std::move(cov);
}

FbmSampler::~FbmSampler() = default;

std::vector<double> FbmSampler::circulant_increments(
    std::uint64_t seed, std::uint64_t stream) const {
    const std::size_t n = grid_.n_steps();
    const std::size_t m = m_;
    RandomStream rng(seed, stream);

    // Spectral synthesis: frequency coefficients built from iid normals in
    // index order 0, m/2, then the conjugate pairs k and m-k.
    std::vector<double> re(m), im(m);
    const double inv_m = 1.0 / static_cast<double>(m);
    re[0] = std::sqrt(lambda_[0] * inv_m) * rng.next_normal();
    im[0] = 0.0;
    re[m / 2] = std::sqrt(lambda_[m / 2] * inv_m) * rng.next_normal();
    im[m / 2] = 0.0;
    for (std::size_t k = 1; k < m / 2; ++k) {
        const double amp = std::sqrt(0.5 * lambda_[k] * inv_m);
        const double g0 = rng.next_normal();
        const double g1 = rng.next_normal();
        re[k] = amp * g0;
        im[k] = amp * g1;
        re[m - k] = re[k];
        im[m - k] = -im[k];
    }

    for (std::size_t j = 0; j < m; ++j) {
        fft_->in[j][0] = re[j];
        fft_->in[j][1] = im[j];
    }
    fftw_execute(fft_->plan);

    const double scale = std::pow(grid_.dt(0), h_.value());
    std::vector<double> db(n);
    for (std::size_t k = 0; k < n; ++k) {
        db[k] = scale * fft_->out[k][0];
    }
    return db;
}

std::vector<double> FbmSampler::cholesky_increments(
    std::uint64_t seed, std::uint64_t stream) const {
    const std::size_t n = grid_.n_steps();
    RandomStream rng(seed, stream);
    std::vector<double> z(n);
    rng.fill_normals(z.data(), n);
    std::vector<double> db(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            acc += chol_[i * n + j] * z[j];
        }
        db[i] = acc;
    }
    return db;
}

std::vector<double> FbmSampler::sample_increments(std::uint64_t seed,
                                                  std::uint64_t stream) const {
    if (diag_.used_circulant) {
        return circulant_increments(seed, stream);
    }
    return cholesky_increments(seed, stream);
}

std::vector<double> FbmSampler::sample_path(std::uint64_t seed,
                                            std::uint64_t stream) const {
    const std::vector<double> db = sample_increments(seed, stream);
    std::vector<double> b(db.size() + 1, 0.0);
    for (std::size_t k = 0; k < db.size(); ++k) {
        b[k + 1] = b[k] + db[k];
    }
    return b;
}

}  // namespace mvfbm::fbm
