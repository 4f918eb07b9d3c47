#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fradelay/errors.hpp"
#include "fradelay/history.hpp"
#include "fradelay/linops.hpp"
#include "fradelay/nonlinearity.hpp"

namespace fradelay::solver {

using cplx = std::complex<double>;

// The delay Caputo initial-value problem
//   D^alpha x(t) = A x(t - tau) + g(x(t), x(t - tau)),  x = phi on [-tau, 0].
struct DelaySystemSpec {
    double alpha;
    double tau;
    linops::Matrix A;
    NonlinearitySpec g;
    HistoryFunction phi;
    double T;       // horizon, > 0
    double h_step;  // uniform grid step; must divide tau and T

    // Explicit block structure for (near-)defective A; bypasses eigendecompose.
    std::optional<linops::JordanStructure> jordan;
    double gamma = 0.01;        // nilpotent rescaling knob
    double cond_limit = 1e8;

    int dim() const { return static_cast<int>(A.rows()); }
    int n_tau() const;    // tau / h_step
    int n_steps() const;  // T / h_step
    void validate() const;
};

// Uniform grid on [-tau, T]; rows 0..n_tau hold phi at grid points exactly.
struct Trajectory {
    double t0 = 0.0;
    double step = 0.0;
    int dim = 0;
    std::vector<cplx> values;  // points() x dim, row-major

    struct Meta {
        std::string solver;
        int iterations = 0;
        double est_error = 0.0;
    } meta;

    int points() const { return dim == 0 ? 0 : static_cast<int>(values.size()) / dim; }
    double time_at(int i) const { return t0 + step * i; }
    std::span<const cplx> row(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<cplx> row(int i) {
        return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    double max_abs() const;
    double final_abs() const;
};

struct PicardReport {
    int iterations = 0;
    double final_delta = 0.0;
    std::vector<double> contraction_ratios;
};

// Raised by solve_direct when the solution leaves the double range; carries
// the trajectory truncated at the last finite row as growth evidence.
struct TrajectoryOverflow : OverflowError {
    TrajectoryOverflow(const std::string& msg, Trajectory partial_)
        : OverflowError(msg), partial(std::move(partial_)) {}
    Trajectory partial;
};

// L1 stepper with method of steps. Convolution weights
// w_j = (j+1)^(1-alpha) - j^(1-alpha) plus a starting correction that makes
// the scheme exact on span{1, t^alpha} (the fractional initial layer).
Trajectory solve_direct(const DelaySystemSpec& spec);

// Picard iteration of the Lyapunov-Perron operator in diagonalized
// coordinates; kernels enter through exact-moment fractional-trapezoid
// quadrature. Returns the trajectory in original coordinates. The operator
// is Volterra-causal, so the fixed point on [0, T] is the restriction of
// the fixed point on [0, infinity).
std::pair<Trajectory, PicardReport> solve_picard(const DelaySystemSpec& spec,
                                                 double tol = 1e-10, int max_iter = 50);

// One application of the Lyapunov-Perron operator. spec.A must already be
// diagonal; xi must live on the spec grid (QuadratureError otherwise).
Trajectory lp_operator_apply(const DelaySystemSpec& spec, const Trajectory& xi);

// max over interior grid points (skipping the first skip_cells of the
// solution range, where the L1 operator of a t^alpha layer is meaningless)
// of || L1-Caputo(x)(t_n) - A x(t_n - tau) - g(x(t_n), x(t_n - tau)) ||_inf.
double caputo_residual(const Trajectory& traj, const DelaySystemSpec& spec,
                       int skip_cells = 10);

// A-priori scale the residual of an accepted trajectory should not exceed:
// starting-correction magnitude at the layer edge plus the smooth-part
// truncation. Same units as caputo_residual.
double residual_estimate(const Trajectory& traj, const DelaySystemSpec& spec,
                         int skip_cells = 10);

// Plain L1 Caputo values of a sampled function on a uniform grid (x[0] at
// t=0); out[n] approximates D^alpha x at t = n h for n >= 1 (out[0] = 0).
std::vector<cplx> l1_caputo(std::span<const cplx> x, double alpha, double h);

}  // namespace fradelay::solver
