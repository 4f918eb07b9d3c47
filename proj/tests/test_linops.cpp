#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

#include "fradelay/errors.hpp"
#include "fradelay/linops.hpp"

using namespace fradelay;
using namespace fradelay::linops;
using linops::cplx;
using linops::Matrix;

namespace {

std::vector<cplx> sorted_lams(const linops::JordanStructure& js) {
    std::vector<cplx> v;
    for (const auto& b : js.blocks)
        for (int r = 0; r < b.size; ++r) v.push_back(b.lambda);
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return v;
}

}  // namespace

TEST_CASE("eigendecompose: diagonal and rotation matrices") {
    Matrix A(2, 2);
    A << cplx{-1.0, 0.0}, cplx{0.0, 0.0}, cplx{0.0, 0.0}, cplx{-2.0, 0.0};
    const auto js = eigendecompose(A, 1e8);
    const auto lam = sorted_lams(js);
    CHECK(std::abs(lam[0] - cplx{-2.0, 0.0}) < 1e-12);
    CHECK(std::abs(lam[1] - cplx{-1.0, 0.0}) < 1e-12);

    Matrix R(2, 2);
    R << cplx{0.0, 0.0}, cplx{1.0, 0.0}, cplx{-1.0, 0.0}, cplx{0.0, 0.0};
    const auto jr = eigendecompose(R, 1e8);
    // characteristic polynomial oracle: lambda^2 + 1 = 0
    const auto lr = sorted_lams(jr);
    CHECK(std::abs(lr[0] - cplx{0.0, -1.0}) < 1e-10);
    CHECK(std::abs(lr[1] - cplx{0.0, 1.0}) < 1e-10);
}

TEST_CASE("eigendecompose rejects a defective nilpotent block") {
    Matrix A(2, 2);
    A << cplx{0.0, 0.0}, cplx{1.0, 0.0}, cplx{0.0, 0.0}, cplx{0.0, 0.0};
    CHECK_THROWS_AS(eigendecompose(A, 1e8), NearDefectiveError);
}

TEST_CASE("gamma_rescale: P structure and the transformed linear part") {
    // diagonal structure: P = identity for any gamma
    linops::JordanStructure diag;
    diag.blocks = {{cplx{-1.0, 0.0}, 1, 0}, {cplx{-2.0, 0.0}, 1, 0}};
    diag.transform = Matrix::Identity(2, 2);
    const auto ts = gamma_rescale(diag, 0.37);
    CHECK((ts.combined - Matrix::Identity(2, 2)).norm() < 1e-14);
    CHECK_FALSE(ts.has_nilpotent);

    // one 2x2 block with eta = 1, gamma = 0.1: off-diagonal becomes 0.1
    linops::JordanStructure blk;
    blk.blocks = {{cplx{-1.0, 0.0}, 2, 1}};
    blk.transform = Matrix::Identity(2, 2);
    const auto tb = gamma_rescale(blk, 0.1);
    CHECK(std::abs(tb.nil_gamma(0, 1) - cplx{0.1, 0.0}) < 1e-15);
    CHECK(tb.has_nilpotent);
    // direct 2x2 product oracle: P^{-1} (lambda I + N) P = lambda I + gamma N
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = A(1, 1) = cplx{-1.0, 0.0};
    A(0, 1) = cplx{1.0, 0.0};
    Matrix got = tb.combined_inv * A * tb.combined;
    CHECK(std::abs(got(0, 1) - cplx{0.1, 0.0}) < 1e-14);
    CHECK(std::abs(got(0, 0) - cplx{-1.0, 0.0}) < 1e-14);

    // gamma = 1 keeps P = identity on every block
    const auto t1 = gamma_rescale(blk, 1.0);
    CHECK((t1.combined - Matrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("round trip and spectrum preservation") {
    Matrix A(3, 3);
    A << cplx{-1.0, 0.0}, cplx{0.3, 0.1}, cplx{0.0, 0.0},
         cplx{0.0, 0.0}, cplx{-0.5, 0.2}, cplx{0.2, 0.0},
         cplx{0.1, 0.0}, cplx{0.0, 0.0}, cplx{-0.8, -0.1};
    const auto js = eigendecompose(A, 1e8);
    const auto ts = gamma_rescale(js, 0.01);
    CHECK((ts.combined * ts.combined_inv - Matrix::Identity(3, 3)).norm() < 1e-10);

    Matrix D = ts.combined_inv * A * ts.combined;
    Eigen::ComplexEigenSolver<Matrix> es(D, false);
    auto got = es.eigenvalues();
    std::vector<cplx> gl(got.data(), got.data() + got.size());
    std::vector<cplx> want = ts.diag_lambdas;
    auto key = [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    };
    std::sort(gl.begin(), gl.end(), key);
    std::sort(want.begin(), want.end(), key);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(gl[i] - want[i]) < 1e-8);
}

TEST_CASE("transform_nonlinearity: zero, nilpotent and identity cases") {
    std::vector<cplx> u{cplx{0.3, 0.0}, cplx{-0.2, 0.0}};
    std::vector<cplx> v{cplx{0.1, 0.0}, cplx{0.4, 0.0}};
    std::vector<cplx> out(2);

    // zero g, diagonal A -> h == 0
    linops::JordanStructure diag;
    diag.blocks = {{cplx{-1.0, 0.0}, 1, 0}, {cplx{-2.0, 0.0}, 1, 0}};
    diag.transform = Matrix::Identity(2, 2);
    auto ts = gamma_rescale(diag, 0.1);
    transform_nonlinearity(NonlinearitySpec::make("zero", 2, {}), ts);
    ts.h(u, v, out);
    CHECK(std::abs(out[0]) < 1e-15);
    CHECK(std::abs(out[1]) < 1e-15);

    // zero g, one nilpotent block with gamma = 0.1 -> h(u,v) = (0.1 v2, 0)
    linops::JordanStructure blk;
    blk.blocks = {{cplx{-1.0, 0.0}, 2, 1}};
    blk.transform = Matrix::Identity(2, 2);
    auto tb = gamma_rescale(blk, 0.1);
    transform_nonlinearity(NonlinearitySpec::make("zero", 2, {}), tb);
    tb.h(u, v, out);
    CHECK(std::abs(out[0] - 0.1 * v[1]) < 1e-15);
    CHECK(std::abs(out[1]) < 1e-15);

    // quadratic g with identity transform -> h == g
    auto tq = gamma_rescale(diag, 1.0);
    const auto g = NonlinearitySpec::make("quadratic", 2, {0.05, 0.03});
    transform_nonlinearity(g, tq);
    tq.h(u, v, out);
    std::vector<cplx> want(2);
    g.eval(u, v, want);
    CHECK(std::abs(out[0] - want[0]) < 1e-15);
    CHECK(std::abs(out[1] - want[1]) < 1e-15);
}

TEST_CASE("h(0,0) stays zero for every built-in family") {
    linops::JordanStructure blk;
    blk.blocks = {{cplx{-1.0, 0.0}, 2, 1}};
    Matrix T(2, 2);
    T << cplx{1.0, 0.0}, cplx{0.4, 0.1}, cplx{-0.2, 0.0}, cplx{1.1, 0.0};
    blk.transform = T;
    for (const char* kind : {"zero", "quadratic", "cubic", "sine"}) {
        auto ts = gamma_rescale(blk, 0.05);
        transform_nonlinearity(NonlinearitySpec::make(kind, 2, {0.2, -0.1}), ts);
        std::vector<cplx> z(2, cplx{0.0, 0.0}), out(2);
        ts.h(z, z, out);
        CHECK(std::abs(out[0]) <= 1e-12);
        CHECK(std::abs(out[1]) <= 1e-12);
    }
}

TEST_CASE("estimate_lipschitz: analytic formulas") {
    CHECK(estimate_lipschitz(NonlinearitySpec::make("zero", 1, {}), 0.5) == 0.0);
    CHECK(estimate_lipschitz(NonlinearitySpec::make("quadratic", 1, {1.0}), 0.1) ==
          doctest::Approx(0.2).epsilon(1e-14));
    CHECK(estimate_lipschitz(NonlinearitySpec::make("cubic", 1, {2.0}), 0.1) ==
          doctest::Approx(0.06).epsilon(1e-14));
    // linear perturbation: induced inf-norm of B, independent of rho
    const auto lin = NonlinearitySpec::make("linear_perturb", 2, {0.5, -0.25, 0.0, 1.0});
    CHECK(estimate_lipschitz(lin, 0.1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(estimate_lipschitz(lin, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(lin.is_h2());
    CHECK(NonlinearitySpec::make("sine", 1, {1.0}).is_h2());
    CHECK_THROWS_AS(estimate_lipschitz(lin, 0.0), DomainError);
}

TEST_CASE("Monte-Carlo bound brackets the analytic one for a custom quadratic") {
    NonlinearitySpec g;
    g.kind = NonlinearitySpec::Kind::custom;
    g.dim = 1;
    g.custom_fn = [](std::span<const cplx> x, std::span<const cplx> y, std::span<cplx> out) {
        out[0] = x[0] * x[0] + y[0] * y[0];
    };
    const double rho = 0.3;
    const double analytic = 2.0 * rho;  // coefficient 1 quadratic
    const double mc = estimate_lipschitz(g, rho, 12345);
    CHECK(mc >= 0.6 * analytic);
    CHECK(mc <= 1.35 * analytic);  // 1.25 safety on top of the sampled supremum
}

TEST_CASE("transformed Lipschitz modulus has the expected small-ball limits") {
    // diagonalizable: l_h(rho) -> 0 as rho -> 0
    linops::JordanStructure diag;
    diag.blocks = {{cplx{-1.0, 0.0}, 1, 0}};
    diag.transform = Matrix::Identity(1, 1);
    auto ts = gamma_rescale(diag, 0.01);
    const auto g = NonlinearitySpec::make("quadratic", 1, {0.05});
    CHECK(transformed_lipschitz(g, ts, 1e-8) <= 1e-8);

    // nilpotent block present: limit is gamma
    linops::JordanStructure blk;
    blk.blocks = {{cplx{-1.0, 0.0}, 2, 1}};
    blk.transform = Matrix::Identity(2, 2);
    auto tb = gamma_rescale(blk, 0.01);
    const auto g2 = NonlinearitySpec::make("quadratic", 2, {0.05, 0.05});
    const double lim = transformed_lipschitz(g2, tb, 1e-9);
    CHECK(lim == doctest::Approx(0.01).epsilon(1e-4));
}

TEST_CASE("jordan validation") {
    linops::JordanStructure js;
    js.blocks = {{cplx{-1.0, 0.0}, 1, 1}};  // size-1 block cannot carry eta
    js.transform = Matrix::Identity(1, 1);
    CHECK_THROWS_AS(js.validate(), DomainError);
    CHECK_THROWS_AS(gamma_rescale(js, 0.0), DomainError);
}
