#include "fradelay/kernels.hpp"

#include <cmath>

namespace fradelay::kernels::scalar {

cplx conv_dot_rev(const double* w, const cplx* x, std::size_t n) {
    double re = 0.0, im = 0.0;
    const cplx* xr = x + n;
    for (std::size_t j = 0; j < n; ++j) {
        --xr;
        re += w[j] * xr->real();
        im += w[j] * xr->imag();
    }
    return {re, im};
}

double weighted_abs_sum(const double* w, const cplx* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        s += w[j] * std::hypot(x[j].real(), x[j].imag());
    }
    return s;
}

}  // namespace fradelay::kernels::scalar
