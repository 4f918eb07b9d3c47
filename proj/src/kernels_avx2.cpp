#include "fradelay/kernels.hpp"

#ifdef FRADELAY_BUILD_AVX2

#include <immintrin.h>

namespace fradelay::kernels::avx2 {

cplx conv_dot_rev(const double* w, const cplx* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    // per step: weights w[j..j+3] against x[n-1-j] .. x[n-4-j]
    for (; j + 4 <= n; j += 4) {
        const double* xb = reinterpret_cast<const double*>(x + (n - 4 - j));
        __m256d lo = _mm256_loadu_pd(xb);       // x[n-4-j], x[n-3-j]
        __m256d hi = _mm256_loadu_pd(xb + 4);   // x[n-2-j], x[n-1-j]
        __m256d w4 = _mm256_loadu_pd(w + j);    // w0 w1 w2 w3
        __m256d whi = _mm256_permute4x64_pd(w4, 0x05);  // w1 w1 w0 w0
        __m256d wlo = _mm256_permute4x64_pd(w4, 0xAF);  // w3 w3 w2 w2
        acc = _mm256_fmadd_pd(hi, whi, acc);
        acc = _mm256_fmadd_pd(lo, wlo, acc);
    }
    alignas(32) double a[4];
    _mm256_store_pd(a, acc);
    double re = a[0] + a[2];
    double im = a[1] + a[3];
    for (; j < n; ++j) {
        re += w[j] * x[n - 1 - j].real();
        im += w[j] * x[n - 1 - j].imag();
    }
    return {re, im};
}

double weighted_abs_sum(const double* w, const cplx* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const double* xb = reinterpret_cast<const double*>(x + j);
        __m256d lo = _mm256_loadu_pd(xb);      // re0 im0 re1 im1
        __m256d hi = _mm256_loadu_pd(xb + 4);  // re2 im2 re3 im3
        __m256d v0 = _mm256_permute2f128_pd(lo, hi, 0x20);  // re0 im0 re2 im2
        __m256d v1 = _mm256_permute2f128_pd(lo, hi, 0x31);  // re1 im1 re3 im3
        __m256d re = _mm256_unpacklo_pd(v0, v1);
        __m256d im = _mm256_unpackhi_pd(v0, v1);
        __m256d mag = _mm256_sqrt_pd(_mm256_fmadd_pd(re, re, _mm256_mul_pd(im, im)));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), mag, acc);
    }
    alignas(32) double a[4];
    _mm256_store_pd(a, acc);
    double s = a[0] + a[1] + a[2] + a[3];
    for (; j < n; ++j) {
        double re = x[j].real(), im = x[j].imag();
        s += w[j] * std::sqrt(re * re + im * im);
    }
    return s;
}

}  // namespace fradelay::kernels::avx2

#endif  // FRADELAY_BUILD_AVX2
