#pragma once
// Validated Hurst index for the long-memory regime H in (1/2, 1).
//
// H = 1/2 (ordinary Brownian motion) is deliberately allowed only through
// the named factory: it is the standard sanity limit for generators and
// covariance checks, but the fractional kernel machinery degenerates there,
// so accidental construction is rejected.

#include <cmath>

#include "mvfbm/errors.hpp"

namespace mvfbm::fbm {

class HurstIndex {
public:
    explicit HurstIndex(double h) : h_(h) {
        if (!(h > 0.5) || !(h < 1.0) || !std::isfinite(h)) {
            throw ConfigError("HurstIndex: H must lie strictly in (1/2, 1); "
                              "use HurstIndex::brownian_sanity() for H = 1/2");
        }
    }

    static HurstIndex brownian_sanity() {
        HurstIndex h;
        h.h_ = 0.5;
        return h;
    }

    double value() const { return h_; }
    bool is_brownian() const { return h_ == 0.5; }

private:
    HurstIndex() = default;
    double h_ = 0.5;
};

}  // namespace mvfbm::fbm
