#pragma once

#include <complex>
#include <vector>

namespace fradelay::ml {

using cplx = std::complex<double>;

struct MLParams {
    double alpha;  // order, (0,1)
    double beta;   // second parameter; the theory uses 1 and alpha
    cplx lambda;   // nonzero
    double tau;    // delay, > 0
    void validate() const;
};

struct EvalPolicy {
    double abs_tol = 1e-12;  // accuracy target for the accumulated sum
    int max_terms = 100000;  // hard cap on series terms
    void validate() const;
};

double heaviside(double t);

// Number of series terms active at time t: k = 0..floor(t/tau).
int active_terms(const MLParams& p, double t);

// E^{lambda,tau}_{alpha,beta}(t): finite sum over k of
// lambda^k (t-k tau)^(alpha k + beta - 1) / Gamma(alpha k + beta) for k tau <= t,
// with the convention E(0) = 1. Terms are accumulated in increasing k with
// compensated summation; when the cancellation between terms exceeds what
// double can absorb the evaluation transparently redoes the same finite sum
// in extended precision. At an interior knot where the local exponent is
// negative the printed sum is infinite and a complex infinity along the
// singular term's phase is returned.
cplx ml_eval(const MLParams& p, double t, const EvalPolicy& policy = {});

// Partial series: only terms k = 0..k_hi. Used for one-sided knot limits.
cplx ml_eval_partial(const MLParams& p, double t, int k_hi, const EvalPolicy& policy = {});

// Cumulative integral of |E| with the mesh graded into every singular knot.
struct AbsIntegralTable {
    std::vector<double> t;    // ascending mesh, t.front() == 0
    std::vector<double> cum;  // integral of |E| over [0, t[i]]
    double value_at(double x) const;  // linear interpolation, clamped
};

AbsIntegralTable ml_abs_integral_table(const MLParams& p, double t_upper, double quad_step);

// integral_0^t_upper |E^{lambda,tau}_{alpha,beta}(s)| ds
double ml_abs_integral(const MLParams& p, double t_upper, double quad_step);

// Certified upper bound for sup_{t>=0} { |E_{alpha,1}(t)| + |lambda| *
// integral_{t-tau}^t |E_{alpha,alpha}(s)| ds + 1 }: grid maximum on
// [0,horizon] plus a decay-fitted tail bound. Requires lambda inside the
// stability region (otherwise the sup can be infinite) -> RegionError.
double ml_sup_weight(const MLParams& p_one, const MLParams& p_alpha,
                     double grid_step, double horizon);

}  // namespace fradelay::ml
