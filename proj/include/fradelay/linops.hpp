#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fradelay/nonlinearity.hpp"

namespace fradelay::linops {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

struct JordanBlock {
    cplx lambda;
    int size = 1;
    int eta = 0;  // 1 when the nilpotent part is present
};

struct JordanStructure {
    std::vector<JordanBlock> blocks;
    Matrix transform;  // T, columns spanning the block chain
    int dim() const;
    void validate() const;
};

struct TransformedSystem {
    std::vector<cplx> diag_lambdas;  // lambda_i repeated block-size times
    Matrix combined;                 // T P
    Matrix combined_inv;
    Matrix nil_gamma;                // diag(gamma_i N_{d_i}), gamma_i in {0, gamma}
    double gamma = 0.0;
    bool has_nilpotent = false;

    // h(u, v) = nil_gamma v + (TP)^{-1} g(TP u, TP v); set by transform_nonlinearity.
    std::function<void(std::span<const cplx>, std::span<const cplx>, std::span<cplx>)> h;

    int dim() const { return static_cast<int>(diag_lambdas.size()); }
};

// Diagonalize A (all blocks size 1). Verifies the reconstruction and the
// conditioning of the eigenvector matrix; beyond cond_limit the matrix is
// treated as (near-)defective and the caller must supply a JordanStructure.
JordanStructure eigendecompose(const Matrix& A, double cond_limit = 1e8);

// Apply the per-block scaling P_i = diag(1, gamma, ..., gamma^{d_i - 1}).
TransformedSystem gamma_rescale(const JordanStructure& j, double gamma);

// Install h(u,v) = nil_gamma v + (TP)^{-1} g(TP u, TP v) into ts.
void transform_nonlinearity(const NonlinearitySpec& g, TransformedSystem& ts);

// Upper bound for the local Lipschitz modulus l_g(rho) in the max norm.
// Built-ins use their analytic formulas; custom specs fall back to a
// Monte-Carlo supremum over 10^4 sample pairs times a 1.25 safety factor.
double estimate_lipschitz(const NonlinearitySpec& g, double rho);
double estimate_lipschitz(const NonlinearitySpec& g, double rho, std::uint64_t mc_seed);

// l_h(rho) bound for the transformed nonlinearity per the composition
// gamma_eff + cond_inf(TP) * l_g(||TP||_inf rho).
double transformed_lipschitz(const NonlinearitySpec& g, const TransformedSystem& ts, double rho);

double matrix_inf_norm(const Matrix& m);

}  // namespace fradelay::linops
