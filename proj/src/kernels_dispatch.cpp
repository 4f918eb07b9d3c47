#include "fradelay/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "fradelay/log.hpp"

namespace fradelay::kernels {

namespace {

Backend pick_default() {
#ifdef FRADELAY_BUILD_AVX2
    if (const char* e = std::getenv("FRADELAY_SIMD")) {
        if (std::strcmp(e, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(e, "avx2") == 0) return Backend::avx2;
    }
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Backend::avx2;
#endif
    return Backend::scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> b{pick_default()};
    return b;
}

}  // namespace

bool backend_available(Backend b) {
    if (b == Backend::scalar) return true;
#ifdef FRADELAY_BUILD_AVX2
    if (b == Backend::avx2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#endif
    return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
    if (!backend_available(b))
        throw std::runtime_error("requested kernel backend not available on this machine");
    current().store(b, std::memory_order_relaxed);
    log::debug(std::string("kernel backend forced to ") + backend_name(b));
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "?";
}

cplx conv_dot_rev(const double* w, const cplx* x, std::size_t n) {
#ifdef FRADELAY_BUILD_AVX2
    if (active_backend() == Backend::avx2) return avx2::conv_dot_rev(w, x, n);
#endif
    return scalar::conv_dot_rev(w, x, n);
}

double weighted_abs_sum(const double* w, const cplx* x, std::size_t n) {
#ifdef FRADELAY_BUILD_AVX2
    if (active_backend() == Backend::avx2) return avx2::weighted_abs_sum(w, x, n);
#endif
    return scalar::weighted_abs_sum(w, x, n);
}

}  // namespace fradelay::kernels
