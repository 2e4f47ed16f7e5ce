#include <cstdlib>
#include <cstring>

#include "mvfbm/simd/ops.hpp"

namespace mvfbm::simd {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* resolve() {
    const char* forced = std::getenv("MVFBM_SIMD");
    if (forced != nullptr) {
        if (std::strcmp(forced, "scalar") == 0) {
            return &scalar_ops();
        }
        if (std::strcmp(forced, "avx2") == 0 && cpu_has_avx2_fma() &&
            avx2_ops() != nullptr) {
            return avx2_ops();
        }
        return &scalar_ops();
    }
    if (cpu_has_avx2_fma() && avx2_ops() != nullptr) {
        return avx2_ops();
    }
    return &scalar_ops();
}

}  // namespace

const Ops& ops() {
    static const Ops* active = resolve();
    return *active;
}

}  // namespace mvfbm::simd
