#include "fradelay/region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fradelay/errors.hpp"

namespace fradelay::region {

namespace {
constexpr double kPi = std::numbers::pi;
}

void RegionParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("region: alpha must be in (0,1)");
    if (!(tau > 0.0)) throw DomainError("region: tau must be positive");
}

RegionVerdict in_region(cplx lambda, const RegionParams& p) {
    p.validate();
    RegionVerdict v;
    if (lambda == cplx(0.0, 0.0)) return v;
    const double a = std::abs(std::arg(lambda));
    const double gate = p.alpha * kPi / 2.0;
    v.arg_ok = (a > gate) && (a <= kPi);
    if (!v.arg_ok) {
        v.margin_to_boundary = -std::abs(lambda);
        return v;
    }
    const double threshold = std::pow((a - gate) / p.tau, p.alpha);
    v.margin_to_boundary = threshold - std::abs(lambda);
    v.member = std::abs(lambda) < threshold;
    return v;
}

std::vector<BoundarySample> boundary_samples(const RegionParams& p, int n) {
    p.validate();
    if (n < 2) throw DomainError("boundary_samples: need n >= 2");
    const double gate = p.alpha * kPi / 2.0;
    std::vector<BoundarySample> out;
    out.reserve(n);
    for (int i = 1; i <= n; ++i) {
        const double theta = gate + (kPi - gate) * static_cast<double>(i) / n;
        const double radius = std::pow((theta - gate) / p.tau, p.alpha);
        out.push_back({theta, radius, std::polar(radius, theta)});
    }
    return out;
}

cplx char_function(cplx s, cplx lambda, const RegionParams& p) {
    p.validate();
    if (s == cplx(0.0, 0.0)) throw DomainError("char_function: s = 0 is on the branch point");
    const cplx spow = std::exp(p.alpha * std::log(s));  // principal branch
    return spow - lambda * std::exp(-p.tau * s);
}

void RootCountWindow::validate() const {
    if (!(re_min < re_max) || !(im_min < im_max))
        throw DomainError("count_roots: degenerate window");
    if (!(margin > 0.0)) throw DomainError("count_roots: margin must be positive");
    if (!(re_min > 0.0))
        throw DomainError("count_roots: window must lie in the open right half-plane");
}

namespace {

struct WindingAccumulator {
    const cplx lambda;
    const RegionParams p;
    const double margin;
    double total = 0.0;     // accumulated phase
    double min_ratio = 1e300;  // min |f| / local-derivative-scale, in s units

    cplx f(cplx s) const { return char_function(s, lambda, p); }

    // Walk one straight segment, refining until the phase step between
    // consecutive samples is below pi/2.
    void segment(cplx a, cplx b) {
        cplx fa = f(a), fb = f(b);
        walk(a, fa, b, fb, 0);
    }

    void walk(cplx a, cplx fa, cplx b, cplx fb, int depth) {
        const double da = std::abs(fa), db = std::abs(fb);
        if (da == 0.0 || db == 0.0)
            throw ContourTooCloseError("count_roots: zero of the characteristic function on the contour");
        const double dphi = std::arg(fb / fa);
        if (std::abs(dphi) < kPi / 2.0 && depth >= 1) {
            // root-proximity check: distance estimate |f| / |f'|, with |f'|
            // estimated by the secant along the contour
            const double deriv = std::abs(fb - fa) / std::max(std::abs(b - a), 1e-300);
            if (deriv > 0.0)
                min_ratio = std::min(min_ratio, std::min(da, db) / deriv);
            total += dphi;
            return;
        }
        if (depth > 48)
            throw ContourTooCloseError("count_roots: contour refinement exhausted (root near contour?)");
        const cplx m = 0.5 * (a + b);
        const cplx fm = f(m);
        walk(a, fa, m, fm, depth + 1);
        walk(m, fm, b, fb, depth + 1);
    }
};

}  // namespace

int count_roots(cplx lambda, const RegionParams& p, const RootCountWindow& w) {
    p.validate();
    w.validate();
    if (lambda == cplx(0.0, 0.0)) return 0;  // s^alpha has no zeros off the origin

    WindingAccumulator acc{lambda, p, w.margin};
    const cplx c1(w.re_min, w.im_min), c2(w.re_max, w.im_min);
    const cplx c3(w.re_max, w.im_max), c4(w.re_min, w.im_max);
    // coarse pre-split so that the exp(-tau s) phase rotation along the long
    // edges is captured before adaptive refinement kicks in
    auto run_edge = [&](cplx a, cplx b) {
        const double len = std::abs(b - a);
        const int pieces = std::max(2, static_cast<int>(std::ceil(len * p.tau / (kPi / 4.0))) );
        for (int i = 0; i < pieces; ++i) {
            const cplx s0 = a + (b - a) * (static_cast<double>(i) / pieces);
            const cplx s1 = a + (b - a) * (static_cast<double>(i + 1) / pieces);
            acc.segment(s0, s1);
        }
    };
    run_edge(c1, c2);
    run_edge(c2, c3);
    run_edge(c3, c4);
    run_edge(c4, c1);

    if (acc.min_ratio < w.margin)
        throw ContourTooCloseError("count_roots: characteristic root within margin of the contour");

    const double turns = acc.total / (2.0 * kPi);
    const long n = std::lround(turns);
    if (std::abs(turns - static_cast<double>(n)) > 0.25)
        throw ContourTooCloseError("count_roots: winding number did not settle to an integer");
    if (n < 0)
        throw ContourTooCloseError("count_roots: negative winding (phase accounting failed)");
    return static_cast<int>(n);
}

RootCountWindow default_window(cplx lambda, const RegionParams& p) {
    const double bound = std::pow(std::abs(lambda), 1.0 / p.alpha);
    const double r = std::max(2.0, bound * 1.25 + 0.5);
    RootCountWindow w;
    w.re_min = 1e-4;
    w.re_max = r;
    w.im_min = -(bound * 1.25 + 2.0);
    w.im_max = +(bound * 1.25 + 2.0);
    w.margin = 1e-6;
    return w;
}

int count_rhp_roots(cplx lambda, const RegionParams& p) {
    RootCountWindow w = default_window(lambda, p);
    double shift = 1.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        try {
            return count_roots(lambda, p, w);
        } catch (const ContourTooCloseError&) {
            shift *= 0.37;
            w.re_min *= shift < 0.1 ? 3.1 : 0.31;
            w.re_max += 0.17;
            w.im_min -= 0.13;
            w.im_max += 0.13;
        }
    }
    return count_roots(lambda, p, w);  // last try, let it throw
}

}  // namespace fradelay::region
