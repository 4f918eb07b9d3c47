#pragma once

#include <complex>
#include <vector>

namespace fradelay::region {

using cplx = std::complex<double>;

struct RegionParams {
    double alpha;  // (0,1)
    double tau;    // > 0
    void validate() const;
};

// Membership verdict for the stability set: lambda != 0,
// alpha*pi/2 < |arg lambda| <= pi and |lambda| < ((|arg lambda| - alpha*pi/2)/tau)^alpha.
struct RegionVerdict {
    bool member = false;
    bool arg_ok = false;
    // threshold_radius - |lambda| when the arg condition holds, else negative.
    double margin_to_boundary = -1.0;
};

RegionVerdict in_region(cplx lambda, const RegionParams& p);

struct BoundarySample {
    double theta;
    double radius;
    cplx point;
};

// n samples of the boundary curve, theta spanning (alpha*pi/2, pi],
// radii strictly increasing. The conjugate branch is implied.
std::vector<BoundarySample> boundary_samples(const RegionParams& p, int n);

// s^alpha - lambda*exp(-tau*s), principal branch of s^alpha.
cplx char_function(cplx s, cplx lambda, const RegionParams& p);

struct RootCountWindow {
    double re_min, re_max;
    double im_min, im_max;
    double margin = 1e-3;  // minimum allowed root distance to the contour
    void validate() const;
};

// Zeros of the characteristic function inside the window, by the argument
// principle on the rectangle boundary. The window must lie in Re(s) > 0.
// Throws ContourTooCloseError when a root sits too close to the contour
// for the phase accounting to be trusted.
int count_roots(cplx lambda, const RegionParams& p, const RootCountWindow& w);

// Default certified window for right-half-plane root counting: any root with
// Re s >= 0 satisfies |s| <= |lambda|^(1/alpha), so the window below captures
// all of them with margin.
RootCountWindow default_window(cplx lambda, const RegionParams& p);

// count_roots over default_window with an automatic retry ladder on
// ContourTooCloseError (perturbs the left edge).
int count_rhp_roots(cplx lambda, const RegionParams& p);

}  // namespace fradelay::region
