#pragma once

// Internal extended-precision accumulator for the delayed Mittag-Leffler
// series. The printed finite sum cancels catastrophically for large t
// (terms up to ~1e56 against sums of ~1e-4), so the same sum is redone in
// MPFR at a precision chosen from the scanned term magnitudes. Every
// intermediate that feeds a large term (t - k tau, alpha k + beta, k*arg,
// k*log|lambda|) is formed in extended precision; forming any of them in
// double first poisons the sum.

#include <mpfr.h>

#include <algorithm>
#include <complex>
#include <vector>

namespace fradelay::ml::detail {

// Per-thread cache of lngamma(alpha k + beta). Evaluation sweeps (decay
// fits, quadrature meshes) hold alpha/beta fixed while t varies, and the
// lngamma calls dominate the extended-precision cost. The cache is kept at
// a precision at least as high as any requested so far for the pair.
class LgammaCache {
  public:
    ~LgammaCache() { clear(); }

    // Returns lngamma(alpha k + beta) at precision >= prec.
    mpfr_srcptr get(double alpha, double beta, int k, mpfr_prec_t prec) {
        if (alpha != alpha_ || beta != beta_ || prec > prec_) {
            clear();
            alpha_ = alpha;
            beta_ = beta;
            prec_ = std::max<mpfr_prec_t>(prec, 512);
        }
        while (static_cast<int>(vals_.size()) <= k) {
            const int kk = static_cast<int>(vals_.size());
            vals_.emplace_back();
            mpfr_init2(&vals_.back(), prec_);
            mpfr_t ak, a, b;
            mpfr_inits2(prec_, ak, a, b, (mpfr_ptr) nullptr);
            mpfr_set_d(a, alpha_, MPFR_RNDN);
            mpfr_set_d(b, beta_, MPFR_RNDN);
            mpfr_mul_ui(ak, a, static_cast<unsigned long>(kk), MPFR_RNDN);
            mpfr_add(ak, ak, b, MPFR_RNDN);
            mpfr_lngamma(&vals_.back(), ak, MPFR_RNDN);
            mpfr_clears(ak, a, b, (mpfr_ptr) nullptr);
        }
        return &vals_[static_cast<std::size_t>(k)];
    }

  private:
    void clear() {
        // __mpfr_struct elements are bitwise-movable (heap limb pointer only),
        // so vector reallocation is safe
        for (auto& v : vals_) mpfr_clear(&v);
        vals_.clear();
    }
    double alpha_ = -1.0, beta_ = 0.0;
    mpfr_prec_t prec_ = 0;
    std::vector<__mpfr_struct> vals_;
};

inline LgammaCache& lgamma_cache() {
    thread_local LgammaCache c;
    return c;
}

// sum over k in [0, K] of |lambda|^k e^{i k theta} x_k^{e_k} / Gamma(a_k),
// x_k = t - k tau, e_k = alpha k + beta - 1, a_k = alpha k + beta.
// skip_below: natural-log floor under which terms are dropped.
inline std::complex<double> sum_series(double alpha, double beta, double abs_lambda,
                                       double arg_lambda, double tau, double t, int K,
                                       mpfr_prec_t prec, double skip_below) {
    mpfr_t at, atau, aalpha, abeta, lnlam;
    mpfr_t xk, ek, ak, lnr, mag, sum_re, sum_im, tmp;
    mpfr_t rot_c, rot_s, stp_c, stp_s, nc, ns;
    mpfr_inits2(prec, at, atau, aalpha, abeta, lnlam, xk, ek, ak, lnr, mag, sum_re, sum_im,
                tmp, rot_c, rot_s, stp_c, stp_s, nc, ns, (mpfr_ptr) nullptr);

    mpfr_set_d(at, t, MPFR_RNDN);
    mpfr_set_d(atau, tau, MPFR_RNDN);
    mpfr_set_d(aalpha, alpha, MPFR_RNDN);
    mpfr_set_d(abeta, beta, MPFR_RNDN);
    mpfr_set_d(lnlam, abs_lambda, MPFR_RNDN);
    mpfr_log(lnlam, lnlam, MPFR_RNDN);
    mpfr_set_zero(sum_re, 1);
    mpfr_set_zero(sum_im, 1);

    // phase of lambda^k via incremental rotation; the per-step error is one
    // rounding at working precision, negligible against the guard bits
    mpfr_set_d(tmp, arg_lambda, MPFR_RNDN);
    mpfr_sin_cos(stp_s, stp_c, tmp, MPFR_RNDN);
    mpfr_set_ui(rot_c, 1ul, MPFR_RNDN);
    mpfr_set_zero(rot_s, 1);

    for (int k = 0; k <= K; ++k) {
        // x_k = t - k*tau (exact at this precision)
        mpfr_mul_ui(xk, atau, static_cast<unsigned long>(k), MPFR_RNDN);
        mpfr_sub(xk, at, xk, MPFR_RNDN);
        // a_k = alpha*k + beta ; e_k = a_k - 1
        mpfr_mul_ui(ak, aalpha, static_cast<unsigned long>(k), MPFR_RNDN);
        mpfr_add(ak, ak, abeta, MPFR_RNDN);
        mpfr_sub_ui(ek, ak, 1ul, MPFR_RNDN);

        const int xs = mpfr_sgn(xk);
        if (xs < 0) break;  // H(t - k tau) = 0
        mpfr_srcptr lgk = lgamma_cache().get(alpha, beta, k, prec);
        if (xs == 0) {
            // knot term: x^e with x == 0
            const int es = mpfr_sgn(ek);
            if (es > 0) continue;  // 0^positive = 0
            // es == 0: contributes 1/Gamma(a_k); es < 0 is handled by the caller
            mpfr_mul_ui(lnr, lnlam, static_cast<unsigned long>(k), MPFR_RNDN);
            mpfr_sub(lnr, lnr, lgk, MPFR_RNDN);
        } else {
            mpfr_log(lnr, xk, MPFR_RNDN);
            mpfr_mul(lnr, lnr, ek, MPFR_RNDN);
            mpfr_mul_ui(tmp, lnlam, static_cast<unsigned long>(k), MPFR_RNDN);
            mpfr_add(lnr, lnr, tmp, MPFR_RNDN);
            mpfr_sub(lnr, lnr, lgk, MPFR_RNDN);
        }
        if (mpfr_get_d(lnr, MPFR_RNDN) >= skip_below) {
            mpfr_exp(mag, lnr, MPFR_RNDN);
            mpfr_fma(sum_re, mag, rot_c, sum_re, MPFR_RNDN);
            mpfr_fma(sum_im, mag, rot_s, sum_im, MPFR_RNDN);
        }
        // advance the rotation to k+1
        mpfr_mul(nc, rot_c, stp_c, MPFR_RNDN);
        mpfr_mul(tmp, rot_s, stp_s, MPFR_RNDN);
        mpfr_sub(nc, nc, tmp, MPFR_RNDN);
        mpfr_mul(ns, rot_c, stp_s, MPFR_RNDN);
        mpfr_mul(tmp, rot_s, stp_c, MPFR_RNDN);
        mpfr_add(ns, ns, tmp, MPFR_RNDN);
        mpfr_swap(rot_c, nc);
        mpfr_swap(rot_s, ns);
    }

    const double re = mpfr_get_d(sum_re, MPFR_RNDN);
    const double im = mpfr_get_d(sum_im, MPFR_RNDN);
    mpfr_clears(at, atau, aalpha, abeta, lnlam, xk, ek, ak, lnr, mag, sum_re, sum_im, tmp,
                rot_c, rot_s, stp_c, stp_s, nc, ns, (mpfr_ptr) nullptr);
    return {re, im};
}

}  // namespace fradelay::ml::detail
