#pragma once

#include <complex>
#include <cstddef>

namespace fradelay::kernels {

using cplx = std::complex<double>;

// Hot inner loops of the solvers and quadratures. `conv_dot_rev` is the
// convolution workhorse: real weights traversed forward against complex
// values traversed backward, as both the fractional-trapezoid and L1 sums
// require. `weighted_abs_sum` accumulates quadrature mass of |E|.
//
// Dispatched at runtime to the best available variant; the scalar
// reference implementations are always built and are the semantics anchor
// for the equivalence tests.

// sum_{j=0}^{n-1} w[j] * x[n-1-j]
cplx conv_dot_rev(const double* w, const cplx* x, std::size_t n);

// sum_{j=0}^{n-1} w[j] * |x[j]|
double weighted_abs_sum(const double* w, const cplx* x, std::size_t n);

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_available(Backend b);
// Test hook; pass an unavailable backend and this throws.
void force_backend(Backend b);
const char* backend_name(Backend b);

namespace scalar {
cplx conv_dot_rev(const double* w, const cplx* x, std::size_t n);
double weighted_abs_sum(const double* w, const cplx* x, std::size_t n);
}  // namespace scalar

#ifdef FRADELAY_BUILD_AVX2
namespace avx2 {
cplx conv_dot_rev(const double* w, const cplx* x, std::size_t n);
double weighted_abs_sum(const double* w, const cplx* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace fradelay::kernels
