#include "fradelay/linops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "fradelay/errors.hpp"

namespace fradelay::linops {

int JordanStructure::dim() const {
    int d = 0;
    for (const auto& b : blocks) d += b.size;
    return d;
}

void JordanStructure::validate() const {
    if (blocks.empty()) throw DomainError("jordan: no blocks");
    for (const auto& b : blocks) {
        if (b.size < 1) throw DomainError("jordan: block size must be positive");
        if (b.eta != 0 && b.eta != 1) throw DomainError("jordan: eta must be 0 or 1");
        if (b.size == 1 && b.eta != 0)
            throw DomainError("jordan: size-1 block cannot carry a nilpotent part");
    }
    if (transform.rows() != transform.cols() || transform.rows() != dim())
        throw DomainError("jordan: transform dimension mismatch");
}

double matrix_inf_norm(const Matrix& m) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

JordanStructure eigendecompose(const Matrix& A, double cond_limit) {
    if (A.rows() != A.cols() || A.rows() == 0)
        throw DomainError("eigendecompose: matrix must be square and nonempty");
    if (!A.allFinite()) throw DomainError("eigendecompose: matrix entries must be finite");

    Eigen::ComplexEigenSolver<Matrix> es(A, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success)
        throw NearDefectiveError("eigendecompose: eigenvalue iteration failed");
    Matrix T = es.eigenvectors();
    const auto& lam = es.eigenvalues();

    Eigen::JacobiSVD<Matrix> svd(T);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= cond_limit))
        throw NearDefectiveError(
            "eigendecompose: eigenvector matrix condition estimate exceeds limit "
            "(matrix near-defective; supply a JordanStructure explicitly)");

    // reconstruction check: T^{-1} A T == diag(lam)
    Matrix D = T.inverse() * A * T;
    double off = 0.0, scale = std::max(1.0, matrix_inf_norm(A));
    for (Eigen::Index i = 0; i < D.rows(); ++i)
        for (Eigen::Index j = 0; j < D.cols(); ++j)
            if (i != j) off = std::max(off, std::abs(D(i, j)));
    if (off > 1e-9 * scale * cond)
        throw NearDefectiveError("eigendecompose: diagonalization residual too large");

    JordanStructure js;
    js.transform = std::move(T);
    for (Eigen::Index i = 0; i < lam.size(); ++i) js.blocks.push_back({lam(i), 1, 0});
    return js;
}

TransformedSystem gamma_rescale(const JordanStructure& j, double gamma) {
    j.validate();
    if (!(gamma > 0.0)) throw DomainError("gamma_rescale: gamma must be positive");
    const int d = j.dim();

    Matrix P = Matrix::Zero(d, d);
    Matrix nil = Matrix::Zero(d, d);
    TransformedSystem ts;
    ts.gamma = gamma;
    int off = 0;
    for (const auto& b : j.blocks) {
        double scale = 1.0;
        for (int r = 0; r < b.size; ++r) {
            P(off + r, off + r) = scale;
            scale *= gamma;
            ts.diag_lambdas.push_back(b.lambda);
        }
        if (b.eta == 1) {
            ts.has_nilpotent = true;
            for (int r = 0; r + 1 < b.size; ++r) nil(off + r, off + r + 1) = gamma;
        }
        off += b.size;
    }
    ts.combined = j.transform * P;
    ts.combined_inv = ts.combined.inverse();
    ts.nil_gamma = std::move(nil);
    return ts;
}

void transform_nonlinearity(const NonlinearitySpec& g, TransformedSystem& ts) {
    g.validate();
    const int d = ts.dim();
    if (g.dim != d) throw DomainError("transform_nonlinearity: dimension mismatch");
    const Matrix TP = ts.combined;
    const Matrix TPinv = ts.combined_inv;
    const Matrix nil = ts.nil_gamma;
    const bool has_nil = ts.has_nilpotent;
    const NonlinearitySpec gc = g;

    ts.h = [d, TP, TPinv, nil, has_nil, gc](std::span<const cplx> u, std::span<const cplx> v,
                                            std::span<cplx> out) {
        Eigen::Map<const Eigen::VectorXcd> uu(u.data(), d), vv(v.data(), d);
        Eigen::VectorXcd xu = TP * uu, xv = TP * vv;
        Eigen::VectorXcd gval(d);
        gc.eval(std::span<const cplx>(xu.data(), static_cast<std::size_t>(d)),
                std::span<const cplx>(xv.data(), static_cast<std::size_t>(d)),
                std::span<cplx>(gval.data(), static_cast<std::size_t>(d)));
        Eigen::VectorXcd res = TPinv * gval;
        if (has_nil) res += nil * vv;
        for (int i = 0; i < d; ++i) out[i] = res(i);
    };
}

double estimate_lipschitz(const NonlinearitySpec& g, double rho) {
    return estimate_lipschitz(g, rho, 0x5eed1234abcdULL);
}

double estimate_lipschitz(const NonlinearitySpec& g, double rho, std::uint64_t mc_seed) {
    g.validate();
    if (!(rho > 0.0)) throw DomainError("estimate_lipschitz: rho must be positive");
    double cmax = 0.0;
    for (double c : g.params) cmax = std::max(cmax, std::abs(c));
    switch (g.kind) {
        case NonlinearitySpec::Kind::zero:
            return 0.0;
        case NonlinearitySpec::Kind::quadratic:
            return 2.0 * rho * cmax;
        case NonlinearitySpec::Kind::cubic:
            return 3.0 * rho * rho * cmax;
        case NonlinearitySpec::Kind::sine:
            return (std::cosh(rho) - 1.0) * cmax;
        case NonlinearitySpec::Kind::linear_perturb: {
            double best = 0.0;
            for (int i = 0; i < g.dim; ++i) {
                double s = 0.0;
                for (int j = 0; j < g.dim; ++j)
                    s += std::abs(g.params[static_cast<std::size_t>(i) * g.dim + j]);
                best = std::max(best, s);
            }
            return best;
        }
        case NonlinearitySpec::Kind::custom:
            break;
    }
    if (g.custom_lips_bound) return g.custom_lips_bound(rho);

    // Monte-Carlo supremum of ||g(x,y)-g(x',y')|| / (||x-x'|| + ||y-y'||)
    // over pairs in the rho-ball, times a safety factor.
    std::mt19937_64 rng(mc_seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int d = g.dim;
    std::vector<cplx> x(d), y(d), xh(d), yh(d), gv(d), gvh(d);
    auto draw = [&](std::vector<cplx>& v) {
        double norm = 0.0;
        for (auto& e : v) {
            e = {unif(rng), unif(rng)};
            norm = std::max(norm, std::abs(e));
        }
        const double target = rho * std::pow(std::abs(unif(rng)), 0.25);
        if (norm > 0.0)
            for (auto& e : v) e *= target / norm;
    };
    double best = 0.0;
    for (int it = 0; it < 10000; ++it) {
        draw(x); draw(y); draw(xh); draw(yh);
        g.eval(x, y, gv);
        g.eval(xh, yh, gvh);
        double num = 0.0, dx = 0.0, dy = 0.0;
        for (int i = 0; i < d; ++i) {
            num = std::max(num, std::abs(gv[i] - gvh[i]));
            dx = std::max(dx, std::abs(x[i] - xh[i]));
            dy = std::max(dy, std::abs(y[i] - yh[i]));
        }
        if (dx + dy > 1e-12) best = std::max(best, num / (dx + dy));
    }
    return best * 1.25;
}

double transformed_lipschitz(const NonlinearitySpec& g, const TransformedSystem& ts,
                             double rho) {
    const double tp = matrix_inf_norm(ts.combined);
    const double tpi = matrix_inf_norm(ts.combined_inv);
    const double gamma_eff = ts.has_nilpotent ? ts.gamma : 0.0;
    return gamma_eff + tpi * tp * estimate_lipschitz(g, tp * rho);
}

}  // namespace fradelay::linops
