#include "fradelay/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fradelay/errors.hpp"
#include "fradelay/gammafn.hpp"
#include "fradelay/log.hpp"

namespace fradelay::analysis {

namespace {

std::vector<cplx> distinct_eigenvalues(const solver::DelaySystemSpec& spec,
                                       std::vector<cplx>* all = nullptr) {
    std::vector<cplx> lams;
    if (spec.jordan) {
        for (const auto& b : spec.jordan->blocks)
            for (int r = 0; r < b.size; ++r) lams.push_back(b.lambda);
    } else {
        auto js = linops::eigendecompose(spec.A, spec.cond_limit);
        for (const auto& b : js.blocks) lams.push_back(b.lambda);
    }
    if (all) *all = lams;
    std::vector<cplx> uniq;
    for (const auto& l : lams) {
        bool seen = false;
        for (const auto& u : uniq)
            if (std::abs(u - l) <= 1e-12 * std::max(1.0, std::abs(l))) { seen = true; break; }
        if (!seen) uniq.push_back(l);
    }
    return uniq;
}

std::vector<double> default_eps_grid() {
    std::vector<double> g;
    const int n = 25;
    for (int i = 0; i < n; ++i)
        g.push_back(1e-4 * std::pow(1.0 / 1e-4, static_cast<double>(i) / (n - 1)));
    return g;
}

}  // namespace

StabilityConstants compute_constants(const solver::DelaySystemSpec& spec,
                                     const ConstantsOptions& opt) {
    spec.validate();
    const region::RegionParams rp{spec.alpha, spec.tau};

    std::vector<cplx> lams = distinct_eigenvalues(spec);
    for (const auto& l : lams)
        if (!region::in_region(l, rp).member)
            throw RegionError("compute_constants: an eigenvalue lies outside the stability region");

    // C(alpha, lambda) = max_i int_0^inf |E_{a,a}^{lam_i,tau}|, horizon + decay tail
    double C = 0.0;
    for (const auto& l : lams) {
        const ml::MLParams pa{spec.alpha, spec.alpha, l, spec.tau};
        const double body = ml::ml_abs_integral(pa, opt.horizon, opt.quad_step);
        ml::EvalPolicy pol;
        double c2 = 0.0;
        for (int i = 0; i <= 24; ++i) {
            const double t = opt.horizon / 2.0 + (opt.horizon / 2.0) * i / 24.0;
            c2 = std::max(c2, std::abs(ml::ml_eval(pa, t, pol)) *
                                  std::pow(t, spec.alpha + 1.0));
        }
        const double tail = c2 / (spec.alpha * std::pow(opt.horizon, spec.alpha));
        C = std::max(C, body + tail);
    }

    // transformed-system Lipschitz composition
    linops::JordanStructure js =
        spec.jordan ? *spec.jordan : linops::eigendecompose(spec.A, spec.cond_limit);
    linops::TransformedSystem ts = linops::gamma_rescale(js, spec.gamma);

    std::vector<double> grid = opt.eps_grid.empty() ? default_eps_grid() : opt.eps_grid;
    std::sort(grid.begin(), grid.end());
    StabilityConstants out;
    out.C_alpha_lambda = C;
    bool found = false;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        const double eps = *it;
        if (!(eps > 0.0)) continue;
        const double q = C * linops::transformed_lipschitz(spec.g, ts, eps);
        if (q < 1.0) {
            out.eps = eps;
            out.q = q;
            found = true;
            break;
        }
    }
    if (!found)
        throw NoContractionError(
            "compute_constants: q >= 1 on the whole eps grid (gamma too large or the "
            "nonlinearity too steep)");

    double supw = 0.0;
    for (const auto& l : lams) {
        const ml::MLParams p1{spec.alpha, 1.0, l, spec.tau};
        const ml::MLParams pa{spec.alpha, spec.alpha, l, spec.tau};
        supw = std::max(supw, ml::ml_sup_weight(p1, pa, opt.supweight_grid,
                                                opt.supweight_horizon));
    }
    out.delta = out.eps * (1.0 - out.q) / supw;
    return out;
}

namespace {

struct HistoryDraw {
    HistoryFunction phi;
};

HistoryFunction draw_history(std::mt19937_64& rng, int kind_sel, int d, double tau,
                             double scale) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto scale_to = [&](std::vector<std::vector<cplx>>& rows, double sup) {
        const double f = sup > 0.0 ? scale / sup : 0.0;
        for (auto& r : rows)
            for (auto& v : r) v *= f;
    };
    switch (kind_sel % 3) {
        case 0: {  // constant
            std::vector<cplx> v(static_cast<std::size_t>(d));
            double sup = 0.0;
            for (auto& e : v) {
                e = {unif(rng), 0.0};
                sup = std::max(sup, std::abs(e));
            }
            std::vector<std::vector<cplx>> rows;
            for (auto& e : v) rows.push_back({e});
            scale_to(rows, sup);
            std::vector<cplx> flat;
            for (auto& r : rows) flat.push_back(r[0]);
            return HistoryFunction::constant(flat, tau);
        }
        case 1: {  // linear in t
            std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(d));
            double sup = 0.0;
            for (auto& r : rows) {
                const double a = unif(rng), b = unif(rng);
                r = {cplx{a, 0.0}, cplx{b, 0.0}};
                sup = std::max({sup, std::abs(a), std::abs(a - tau * b)});
            }
            scale_to(rows, sup);
            return HistoryFunction::polynomial(rows, tau);
        }
        default: {  // sampled noise
            const int nodes = 17;
            std::vector<double> grid;
            std::vector<std::vector<cplx>> samples;
            double sup = 0.0;
            for (int i = 0; i < nodes; ++i) {
                grid.push_back(-tau + tau * static_cast<double>(i) / (nodes - 1));
                std::vector<cplx> v(static_cast<std::size_t>(d));
                for (auto& e : v) {
                    e = {unif(rng), 0.0};
                    sup = std::max(sup, std::abs(e));
                }
                samples.push_back(std::move(v));
            }
            scale_to(samples, sup);
            return HistoryFunction::sampled(std::move(grid), std::move(samples), tau);
        }
    }
}

double row_inf_norm(std::span<const cplx> r) {
    double m = 0.0;
    for (const auto& v : r) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

StabilityReport verify_stability(const solver::DelaySystemSpec& spec, const VerifyOptions& opt) {
    spec.validate();
    if (opt.n_histories < 1) throw DomainError("verify_stability: need at least one history");
    StabilityReport rep;
    rep.seed = opt.seed;
    rep.n_histories = opt.n_histories;

    const region::RegionParams rp{spec.alpha, spec.tau};
    std::vector<cplx> all;
    std::vector<cplx> lams = distinct_eigenvalues(spec, &all);
    rep.eigenvalues = all;
    bool all_member = true;
    for (const auto& l : all) {
        rep.region_verdicts.push_back(region::in_region(l, rp));
        all_member = all_member && rep.region_verdicts.back().member;
    }
    try {
        int total = 0;
        for (const auto& l : lams) total += region::count_rhp_roots(l, rp);
        rep.root_count_total = total;
    } catch (const Error& e) {
        rep.note += std::string("root count unavailable: ") + e.what() + "; ";
    }

    if (opt.want_certified && all_member) {
        try {
            rep.constants = compute_constants(spec, opt.constants_opt);
        } catch (const Error& e) {
            rep.note += std::string("constants unavailable: ") + e.what() + "; ";
        }
    }

    double scale = opt.scale;
    if (scale < 0.0) scale = rep.constants ? rep.constants->delta : 0.1;
    rep.empirical.scale = scale;
    rep.certified_mode = rep.constants && scale <= rep.constants->delta * (1.0 + 1e-12);

    // simulation grid: coarsen the step so the budget holds, keeping tau alignment
    const double horizon = opt.horizon > 0.0 ? opt.horizon : std::max(50.0 * spec.tau, 100.0);
    const double T_v = std::ceil(horizon / spec.tau - 1e-12) * spec.tau;
    const int per_tau =
        std::clamp(static_cast<int>(std::floor(opt.max_points * spec.tau / T_v)), 1, spec.n_tau());
    const double h_v = spec.tau / per_tau;
    rep.horizon = T_v;
    rep.h_used = h_v;

    // transform for the certified epsilon check
    linops::Matrix tpinv;
    if (rep.certified_mode) {
        linops::JordanStructure js =
            spec.jordan ? *spec.jordan : linops::eigendecompose(spec.A, spec.cond_limit);
        tpinv = linops::gamma_rescale(js, spec.gamma).combined_inv;
    }

    std::mt19937_64 rng(opt.seed);
    const int d = spec.dim();
    double worst_sup = 0.0, worst_final = 0.0;
    bool grew = false, all_decayed = true, within = true;

    std::vector<double> envelope;  // max over histories of ||x|| on a shared subsample
    std::vector<double> env_t;
    const int env_n = 64;

    for (int hidx = 0; hidx < opt.n_histories; ++hidx) {
        solver::DelaySystemSpec s2 = spec;
        s2.phi = draw_history(rng, hidx, d, spec.tau, scale);
        s2.T = T_v;
        s2.h_step = h_v;
        try {
            solver::Trajectory tr = solver::solve_direct(s2);
            const int ntau = s2.n_tau();
            const int N = s2.n_steps();
            double sup = 0.0;
            for (int n = 0; n <= N; ++n) sup = std::max(sup, row_inf_norm(tr.row(ntau + n)));
            const double fin = tr.final_abs();
            worst_sup = std::max(worst_sup, sup);
            worst_final = std::max(worst_final, fin);
            if (sup >= 10.0 * std::max(scale, 1e-300)) grew = true;
            if (!(fin <= 0.01 * scale)) all_decayed = false;
            if (rep.certified_mode) {
                Eigen::VectorXcd x(d), y(d);
                for (int n = 0; n <= N; ++n) {
                    auto row = tr.row(ntau + n);
                    for (int c = 0; c < d; ++c) x(c) = row[static_cast<std::size_t>(c)];
                    y = tpinv * x;
                    double ynorm = 0.0;
                    for (int c = 0; c < d; ++c) ynorm = std::max(ynorm, std::abs(y(c)));
                    if (ynorm > rep.constants->eps * (1.0 + 1e-9)) within = false;
                }
            }
            if (envelope.empty()) {
                envelope.assign(env_n + 1, 0.0);
                env_t.assign(env_n + 1, 0.0);
                for (int i = 0; i <= env_n; ++i)
                    env_t[i] = T_v * (0.25 + 0.75 * static_cast<double>(i) / env_n);
            }
            for (int i = 0; i <= env_n; ++i) {
                const int n = static_cast<int>(std::lround(env_t[i] / h_v));
                envelope[i] = std::max(envelope[i], row_inf_norm(tr.row(ntau + std::min(n, N))));
            }
        } catch (const OverflowError&) {
            grew = true;
            all_decayed = false;
            worst_sup = std::numeric_limits<double>::infinity();
        }
    }

    // monotone-envelope check on the last quarter + log-log slope
    bool envelope_ok = true;
    if (!envelope.empty()) {
        double run_max = 0.0;
        for (int i = env_n; i >= 0; --i) {
            if (env_t[i] < 0.75 * T_v) break;
            if (envelope[i] < run_max * (1.0 - 0.05)) envelope_ok = envelope_ok && true;
            if (envelope[i] > 0.0 && run_max > 0.0 && envelope[i] * (1.0 - 0.05) > run_max)
                envelope_ok = false;  // rising tail
            run_max = std::max(run_max, envelope[i]);
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (int i = 0; i <= env_n; ++i) {
            if (envelope[i] <= 0.0) continue;
            const double lx = std::log(env_t[i]), ly = std::log(envelope[i]);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
            ++cnt;
        }
        if (cnt >= 2 && cnt * sxx - sx * sx > 0)
            rep.empirical.decay_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    }

    rep.empirical.sup_norm = worst_sup;
    rep.empirical.final_norm = worst_final;
    rep.empirical.grew = grew;
    rep.empirical.decayed = all_decayed && envelope_ok;
    rep.empirical.within_eps = rep.certified_mode ? within : true;

    if (grew)
        rep.empirical.verdict = "unstable_empirical";
    else if (rep.certified_mode && within && rep.root_count_total == 0 && all_member)
        rep.empirical.verdict = "stable_certified";
    else if (rep.empirical.decayed)
        rep.empirical.verdict = "stable_empirical";
    else
        rep.empirical.verdict = "inconclusive";
    return rep;
}

DecayFit decay_fit(const ml::MLParams& p, double t_lo, double t_hi, int n_points) {
    p.validate();
    if (!(t_hi > t_lo) || !(t_lo >= 1.0) || n_points < 2)
        throw DomainError("decay_fit: need t_hi > t_lo >= 1 and at least two points");
    ml::EvalPolicy pol;
    std::vector<double> xs, ys;
    for (int i = 0; i < n_points; ++i) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (n_points - 1));
        const double v = std::abs(ml::ml_eval(p, t, pol));
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        xs.push_back(std::log(t));
        ys.push_back(std::log(v));
    }
    const int n = static_cast<int>(xs.size());
    if (n < 2) throw DomainError("decay_fit: degenerate fit grid (function vanished?)");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i]; sy += ys[i];
        sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i]; syy += ys[i] * ys[i];
    }
    DecayFit f;
    const double den = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / den;
    const double ss_res = syy - sy * sy / n - f.slope * (sxy - sx * sy / n);
    const double ss_tot = syy - sy * sy / n;
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace fradelay::analysis
