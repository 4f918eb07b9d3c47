#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fradelay/mlfunc.hpp"
#include "fradelay/region.hpp"
#include "fradelay/solver.hpp"

namespace fradelay::analysis {

using cplx = std::complex<double>;

// Explicit constants of the linearized-stability construction:
// q = C(alpha,lambda) * l_h(eps) < 1 and
// delta = eps (1-q) / max_i sup_t { |E_{a,1}(t)| + |lam_i| int_{t-tau}^t |E_{a,a}| + 1 }.
struct StabilityConstants {
    double C_alpha_lambda = 0.0;
    double eps = 0.0;
    double q = 0.0;
    double delta = 0.0;
};

struct ConstantsOptions {
    std::vector<double> eps_grid;  // empty: geometric 1e-4 .. 1, 25 points
    double quad_step = 0.03;
    double horizon = 120.0;        // integration horizon before the tail bound
    double supweight_grid = 0.1;
    double supweight_horizon = 100.0;
};

StabilityConstants compute_constants(const solver::DelaySystemSpec& spec,
                                     const ConstantsOptions& opt = {});

struct EmpiricalSummary {
    double sup_norm = 0.0;    // worst sup-norm over histories (t >= 0)
    double final_norm = 0.0;  // worst final norm
    double scale = 0.0;       // exact history sup-norm used
    double decay_slope = 0.0; // log-log slope of the norm envelope tail
    bool decayed = false;     // final <= 0.01 * scale with monotone envelope tail
    bool grew = false;        // 10x growth or overflow
    bool within_eps = true;   // certified mode only
    std::string verdict;      // stable_certified | stable_empirical | unstable_empirical | inconclusive
};

struct StabilityReport {
    std::vector<cplx> eigenvalues;
    std::vector<region::RegionVerdict> region_verdicts;
    int root_count_total = -1;  // -1: not determined
    std::optional<StabilityConstants> constants;
    EmpiricalSummary empirical;
    std::uint64_t seed = 0;
    int n_histories = 0;
    double horizon = 0.0;
    double h_used = 0.0;
    bool certified_mode = false;
    std::string note;
};

struct VerifyOptions {
    int n_histories = 20;
    double scale = -1.0;  // <= 0: delta when certified, else 0.1
    std::uint64_t seed = 1;
    double horizon = -1.0;  // <= 0: max(50 tau, 100)
    int max_points = 8192;  // simulation budget; step is coarsened to fit
    bool want_certified = true;
    ConstantsOptions constants_opt;
};

// Random-history stability experiment with desk-scale boundedness and decay surrogates.
StabilityReport verify_stability(const solver::DelaySystemSpec& spec,
                                 const VerifyOptions& opt = {});

struct DecayFit {
    double slope = 0.0;
    double r2 = 0.0;
};

// Least-squares slope of log|E| vs log t on a geometric grid in [t_lo, t_hi].
DecayFit decay_fit(const ml::MLParams& p, double t_lo, double t_hi, int n_points = 40);

}  // namespace fradelay::analysis
