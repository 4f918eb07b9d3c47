#include "fradelay/mlfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fradelay/errors.hpp"
#include "fradelay/gammafn.hpp"
#include "fradelay/kernels.hpp"
#include "fradelay/region.hpp"
#include "mpseries.hpp"

namespace fradelay::ml {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Neumaier-compensated accumulator.
struct Kahan {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

int top_term_index(double t, double tau) {
    int K = static_cast<int>(std::floor(t / tau));
    while ((K + 1) * tau <= t) ++K;
    while (K > 0 && K * tau > t) --K;
    return K;
}

struct TermScan {
    int K = 0;
    double max_log = -std::numeric_limits<double>::infinity();
    bool near_knot = false;   // some x_k positive but so small the double difference is noise
    int sing_knot = -1;       // exact knot hit with negative exponent -> printed sum infinite
};

TermScan scan_terms(const MLParams& p, double t, int k_hi) {
    TermScan sc;
    sc.K = std::min(top_term_index(t, p.tau), k_hi);
    const double llam = std::log(std::abs(p.lambda));
    for (int k = 0; k <= sc.K; ++k) {
        const double x = t - k * p.tau;
        const double ak = p.alpha * k + p.beta;
        const double ek = ak - 1.0;
        if (x == 0.0) {
            if (ek < -1e-15) sc.sing_knot = k;
            else if (std::abs(ek) <= 1e-15) sc.max_log = std::max(sc.max_log, k * llam - log_gamma(ak));
            continue;
        }
        if (x < 64.0 * kEps * t) sc.near_knot = true;
        sc.max_log = std::max(sc.max_log, k * llam + ek * std::log(x) - log_gamma(ak));
    }
    return sc;
}

cplx eval_series(const MLParams& p, double t, int k_hi, const EvalPolicy& policy) {
    p.validate();
    policy.validate();
    if (t < 0.0) throw DomainError("ml_eval: t must be nonnegative");
    if (t == 0.0) return {1.0, 0.0};

    const int K_full = top_term_index(t, p.tau);
    if (K_full + 1 > policy.max_terms)
        throw DomainError("ml_eval: active series terms exceed policy.max_terms");
    const TermScan sc = scan_terms(p, t, k_hi);

    const double arg_lam = std::arg(p.lambda);
    if (sc.sing_knot >= 0) {
        // value of the printed expression is infinite; keep the phase of the
        // singular term so callers can see the direction of blow-up
        const double inf = std::numeric_limits<double>::infinity();
        const double ph = sc.sing_knot * arg_lam;
        return {inf * std::cos(ph), inf * std::sin(ph)};
    }

    bool escalate = sc.near_knot;
    cplx sum_d{0.0, 0.0};
    double max_abs = 0.0;

    if (!escalate) {
        Kahan re, im;
        cplx lam_pow{1.0, 0.0};
        double sum_abs = 0.0;
        const double llam = std::log(std::abs(p.lambda));
        for (int k = 0; k <= sc.K; ++k) {
            const double x = t - k * p.tau;
            const double ak = p.alpha * k + p.beta;
            const double ek = ak - 1.0;
            cplx term;
            if (x == 0.0) {
                term = (std::abs(ek) <= 1e-15) ? lam_pow * rgamma(ak) : cplx{0.0, 0.0};
            } else if (ak <= 170.0 && std::abs(ek * std::log(x)) < 690.0) {
                term = lam_pow * (std::pow(x, ek) / gamma_fn(ak));
            } else {
                const double lnr = k * llam + ek * std::log(x) - log_gamma(ak);
                if (lnr > 709.0) { escalate = true; break; }
                term = std::polar(std::exp(lnr), k * arg_lam);
            }
            re.add(term.real());
            im.add(term.imag());
            sum_abs += std::abs(term);
            max_abs = std::max(max_abs, std::abs(term));
            lam_pow *= p.lambda;
        }
        if (!escalate) {
            sum_d = {re.value(), im.value()};
            const double noise = 8.0 * kEps * sum_abs;
            const double target = std::max(policy.abs_tol * 0.1, std::abs(sum_d) * 1e-13);
            if (!std::isfinite(sum_d.real()) || !std::isfinite(sum_d.imag()) || noise > target)
                escalate = true;
        }
    }

    if (escalate) {
        const double ln_floor = std::log(std::max(policy.abs_tol, 1e-290)) - 11.5;
        const double span = std::max(0.0, sc.max_log - ln_floor);
        const mpfr_prec_t prec =
            static_cast<mpfr_prec_t>(std::min(8192.0, 96.0 + std::ceil(span / M_LN2)));
        sum_d = detail::sum_series(p.alpha, p.beta, std::abs(p.lambda), arg_lam, p.tau, t,
                                   sc.K, prec, ln_floor);
        if (!std::isfinite(sum_d.real()) || !std::isfinite(sum_d.imag()))
            throw OverflowError("ml_eval: series value exceeds the representable range");
    }
    return sum_d;
}

}  // namespace

void MLParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("MLParams: alpha must be in (0,1)");
    if (!(tau > 0.0)) throw DomainError("MLParams: tau must be positive");
    if (lambda == cplx(0.0, 0.0)) throw DomainError("MLParams: lambda must be nonzero");
    if (!std::isfinite(beta)) throw DomainError("MLParams: beta must be finite");
}

void EvalPolicy::validate() const {
    if (!(abs_tol > 0.0)) throw DomainError("EvalPolicy: abs_tol must be positive");
    if (max_terms < 1) throw DomainError("EvalPolicy: max_terms must be >= 1");
}

double heaviside(double t) { return t >= 0.0 ? 1.0 : 0.0; }

int active_terms(const MLParams& p, double t) {
    p.validate();
    if (t < 0.0) throw DomainError("active_terms: t must be nonnegative");
    return top_term_index(t, p.tau) + 1;
}

cplx ml_eval(const MLParams& p, double t, const EvalPolicy& policy) {
    return eval_series(p, t, std::numeric_limits<int>::max(), policy);
}

cplx ml_eval_partial(const MLParams& p, double t, int k_hi, const EvalPolicy& policy) {
    if (k_hi < 0) return {0.0, 0.0};
    if (t == 0.0) return {1.0, 0.0};
    return eval_series(p, t, k_hi, policy);
}

double AbsIntegralTable::value_at(double x) const {
    if (t.empty()) return 0.0;
    if (x <= t.front()) return 0.0;
    if (x >= t.back()) return cum.back();
    auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double t0 = t[i - 1], t1 = t[i];
    const double w = (x - t0) / (t1 - t0);
    return cum[i - 1] + w * (cum[i] - cum[i - 1]);
}

namespace {

// One knot interval [k tau, min((k+1) tau, T)] of the |E| quadrature.
// Singular intervals (alpha k + beta - 1 < 0) are integrated in the graded
// variable v = (u - k tau)^p, p = alpha k + beta, which makes the singular
// term's contribution constant; the v->0 limit of the transformed integrand
// is |lambda^k / Gamma(alpha k + beta)| / p, appended analytically.
struct IntervalQuad {
    std::vector<double> u;       // mesh points (absolute time), ascending
    std::vector<cplx> values;    // E at mesh points (one-sided at knots)
    std::vector<double> weights; // composite trapezoid weights in the integration variable
    double analytic0 = 0.0;      // contribution of the analytic limit point, already weighted
};

IntervalQuad quad_interval(const MLParams& p, int k, double T, double quad_step,
                           const EvalPolicy& pol) {
    IntervalQuad q;
    const double u0 = k * p.tau;
    const double u1 = std::min((k + 1) * p.tau, T);
    const double L = u1 - u0;
    if (L <= 0.0) return q;
    const double sigma = p.alpha * k + p.beta - 1.0;
    // far from the origin the integrand is smooth and tiny; stretch the mesh
    // (the error stays controlled by quad_step near the singular knots)
    quad_step *= std::min(6.0, 1.0 + (k * p.tau) / 20.0);

    const bool clip_right = (u1 < (k + 1) * p.tau - 1e-12 * p.tau);

    if (sigma < -1e-12) {
        const double pe = sigma + 1.0;  // in (0,1)
        const double vmax = std::pow(L, pe);
        const int n = std::clamp(static_cast<int>(std::ceil(vmax / quad_step)), 16, 200000);
        const double dv = vmax / n;
        // F(v) = |E(u0 + v^(1/pe))| * (1/pe) * v^((1-pe)/pe); F(0) analytic
        const double c_log =
            k * std::log(std::abs(p.lambda)) - log_gamma(p.alpha * k + p.beta);
        q.analytic0 = std::exp(c_log) / pe * (dv / 2.0);
        for (int i = 1; i <= n; ++i) {
            const double v = i * dv;
            const double du = std::pow(v, 1.0 / pe);
            const double uu = (i == n && !clip_right) ? u1 : u0 + du;
            cplx Ev = (i == n) ? ml_eval_partial(p, uu, (uu >= (k + 1) * p.tau - 1e-12 * p.tau) ? k
                                                 : std::numeric_limits<int>::max(), pol)
                               : ml_eval(p, uu, pol);
            q.u.push_back(uu);
            q.values.push_back(Ev);
            const double jac = (1.0 / pe) * std::pow(v, (1.0 - pe) / pe);
            q.weights.push_back((i == n ? dv / 2.0 : dv) * jac);
        }
    } else {
        const int n = std::clamp(static_cast<int>(std::ceil(L / quad_step)), 4, 200000);
        const double du = L / n;
        for (int i = 0; i <= n; ++i) {
            const double uu = (i == n) ? u1 : u0 + i * du;
            cplx Ev;
            if (i == n && !clip_right) {
                // left limit at the right-end knot: exclude the incoming term
                Ev = ml_eval_partial(p, uu, k, pol);
            } else {
                Ev = ml_eval(p, uu, pol);
            }
            q.u.push_back(uu);
            q.values.push_back(Ev);
            q.weights.push_back((i == 0 || i == n) ? du / 2.0 : du);
        }
    }
    return q;
}

}  // namespace

AbsIntegralTable ml_abs_integral_table(const MLParams& p, double t_upper, double quad_step) {
    p.validate();
    if (t_upper < 0.0) throw DomainError("ml_abs_integral: t_upper must be nonnegative");
    if (!(quad_step > 0.0)) throw DomainError("ml_abs_integral: quad_step must be positive");
    AbsIntegralTable tab;
    tab.t.push_back(0.0);
    tab.cum.push_back(0.0);
    if (t_upper == 0.0) return tab;
    EvalPolicy pol;
    pol.abs_tol = 1e-10;
    const int k_top = top_term_index(t_upper, p.tau);
    double acc = 0.0;
    for (int k = 0; k <= k_top; ++k) {
        IntervalQuad q = quad_interval(p, k, t_upper, quad_step, pol);
        if (q.u.empty()) continue;
        acc += q.analytic0;
        double prev_u = k * p.tau;
        for (std::size_t i = 0; i < q.u.size(); ++i) {
            // composite trapezoid, advanced cell by cell so the cumulative
            // table stays consistent at interior points
            acc += q.weights[i] * std::abs(q.values[i]);
            if (q.u[i] > prev_u) {
                tab.t.push_back(q.u[i]);
                tab.cum.push_back(acc);
                prev_u = q.u[i];
            }
        }
    }
    return tab;
}

double ml_abs_integral(const MLParams& p, double t_upper, double quad_step) {
    p.validate();
    if (t_upper < 0.0) throw DomainError("ml_abs_integral: t_upper must be nonnegative");
    if (!(quad_step > 0.0)) throw DomainError("ml_abs_integral: quad_step must be positive");
    if (t_upper == 0.0) return 0.0;
    EvalPolicy pol;
    pol.abs_tol = 1e-10;
    const int k_top = top_term_index(t_upper, p.tau);
    double acc = 0.0;
    for (int k = 0; k <= k_top; ++k) {
        IntervalQuad q = quad_interval(p, k, t_upper, quad_step, pol);
        if (q.u.empty()) continue;
        acc += q.analytic0;
        acc += kernels::weighted_abs_sum(q.weights.data(), q.values.data(), q.values.size());
    }
    return acc;
}

double ml_sup_weight(const MLParams& p_one, const MLParams& p_alpha, double grid_step,
                     double horizon) {
    p_one.validate();
    p_alpha.validate();
    if (!(grid_step > 0.0)) throw DomainError("ml_sup_weight: grid_step must be positive");
    if (p_one.lambda != p_alpha.lambda || p_one.alpha != p_alpha.alpha ||
        p_one.tau != p_alpha.tau)
        throw DomainError("ml_sup_weight: parameter sets must share alpha, lambda, tau");
    if (std::abs(p_one.beta - 1.0) > 1e-12)
        throw DomainError("ml_sup_weight: first parameter set must have beta = 1");
    if (std::abs(p_alpha.beta - p_alpha.alpha) > 1e-12)
        throw DomainError("ml_sup_weight: second parameter set must have beta = alpha");
    if (horizon < p_one.tau) throw DomainError("ml_sup_weight: horizon must be >= tau");

    const region::RegionParams rp{p_one.alpha, p_one.tau};
    if (!region::in_region(p_one.lambda, rp).member)
        throw RegionError("ml_sup_weight: lambda outside the stability region, tail bound unavailable");

    const double abs_lam = std::abs(p_one.lambda);
    const AbsIntegralTable tab =
        ml_abs_integral_table(p_alpha, horizon, std::min(grid_step * 0.5, p_one.tau / 16.0));

    EvalPolicy pol;
    pol.abs_tol = 1e-10;
    const int n = std::max(2, static_cast<int>(std::ceil(horizon / grid_step)));
    double best = 0.0;
    double c1 = 0.0, c2 = 0.0;  // decay-fit constants over the tail window
    for (int i = 0; i <= n; ++i) {
        const double t = std::min(horizon, i * grid_step);
        const double e1 = std::abs(ml_eval(p_one, t, pol));
        const double win = tab.value_at(t) - tab.value_at(t - p_one.tau);
        best = std::max(best, e1 + abs_lam * win + 1.0);
        if (t >= horizon / 2.0) {
            c1 = std::max(c1, e1 * std::pow(t, p_one.alpha));
            const double ea = std::abs(ml_eval(p_alpha, t, pol));
            c2 = std::max(c2, ea * std::pow(t, p_one.alpha + 1.0));
        }
    }
    const double tail = c1 / std::pow(horizon, p_one.alpha) +
                        abs_lam * c2 * p_one.tau /
                            std::pow(horizon - p_one.tau, p_one.alpha + 1.0) +
                        1.0;
    return std::max(best, tail);
}

}  // namespace fradelay::ml
