#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fradelay/errors.hpp"
#include "fradelay/region.hpp"
#include "oracles.hpp"

using namespace fradelay;
using region::cplx;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("in_region: printed examples") {
    region::RegionParams p{0.5, 1.0};
    CHECK_FALSE(region::in_region({1.0, 0.0}, p).member);   // arg condition fails
    CHECK_FALSE(region::in_region({1.0, 0.0}, p).arg_ok);

    const auto v = region::in_region({-1.0, 0.0}, p);
    CHECK(v.member);
    CHECK(v.arg_ok);
    // threshold radius (3 pi / 4)^0.5
    CHECK(v.margin_to_boundary ==
          doctest::Approx(std::sqrt(3.0 * kPi / 4.0) - 1.0).epsilon(1e-12));

    const auto z = region::in_region({0.0, 0.0}, p);
    CHECK_FALSE(z.member);
    CHECK_FALSE(z.arg_ok);
}

TEST_CASE("in_region is conjugation invariant") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    region::RegionParams p{0.4, 1.0};
    for (int i = 0; i < 200; ++i) {
        const cplx lam{u(rng), u(rng)};
        const auto a = region::in_region(lam, p);
        const auto b = region::in_region(std::conj(lam), p);
        CHECK(a.member == b.member);
        CHECK(a.arg_ok == b.arg_ok);
        CHECK(a.margin_to_boundary == doctest::Approx(b.margin_to_boundary).epsilon(1e-12));
    }
}

TEST_CASE("boundary_samples: radii, endpoints, limits") {
    region::RegionParams p{0.5, 1.0};
    const auto s = region::boundary_samples(p, 64);
    REQUIRE(s.size() == 64);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].radius > s[i - 1].radius);
    CHECK(s.back().theta == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(s.back().radius == doctest::Approx(std::sqrt(3.0 * kPi / 4.0)).epsilon(1e-12));
    CHECK(s.front().radius > 0.0);
    // theta -> (alpha pi / 2)+ sends the radius to zero
    const auto dense = region::boundary_samples(p, 4096);
    CHECK(dense.front().radius < 0.03);

    // alpha -> 1: the radius at theta = pi approaches pi/2 (classical delay ODE)
    region::RegionParams p1{0.999, 1.0};
    const auto s1 = region::boundary_samples(p1, 8);
    CHECK(s1.back().radius == doctest::Approx(kPi / 2.0).epsilon(5e-3));

    CHECK_THROWS_AS(region::boundary_samples(p, 1), DomainError);
}

TEST_CASE("char_function values and domain gate") {
    region::RegionParams p{0.5, 1.0};
    CHECK(std::abs(region::char_function({1.0, 0.0}, {1.0, 0.0}, p) -
                   cplx{1.0 - std::exp(-1.0), 0.0}) <= 1e-15);
    CHECK(std::abs(region::char_function({1.0, 0.0}, {0.0, 0.0}, p) - cplx{1.0, 0.0}) <=
          1e-15);
    CHECK_THROWS_AS(region::char_function({0.0, 0.0}, {1.0, 0.0}, p), DomainError);
}

TEST_CASE("count_roots: bisection oracle locates the real root for lambda = 1") {
    region::RegionParams p{0.5, 1.0};
    // f(s) = sqrt(s) - exp(-s) changes sign on (0, 1)
    const double root = oracles::bisect(
        [](double s) { return std::sqrt(s) - std::exp(-s); }, 1e-6, 1.0, 1e-12);
    CHECK(root > 0.0);
    CHECK(std::abs(std::sqrt(root) - std::exp(-root)) <= 1e-10);

    region::RootCountWindow w{0.01, 2.0, -2.0, 2.0, 1e-6};
    CHECK(region::count_roots({1.0, 0.0}, p, w) >= 1);

    // winding additivity across a vertical split away from the root
    region::RootCountWindow wl{0.01, root + 0.3, -2.0, 2.0, 1e-6};
    region::RootCountWindow wr{root + 0.3, 2.0, -2.0, 2.0, 1e-6};
    CHECK(region::count_roots({1.0, 0.0}, p, wl) +
              region::count_roots({1.0, 0.0}, p, wr) ==
          region::count_roots({1.0, 0.0}, p, w));
}

TEST_CASE("count_roots: stable lambda has no right-half-plane roots") {
    region::RegionParams p{0.5, 1.0};
    region::RootCountWindow w{0.01, 3.0, -10.0, 10.0, 1e-6};
    CHECK(region::count_roots({-1.0, 0.0}, p, w) == 0);
    CHECK(region::count_roots({0.0, 0.0}, p, w) == 0);
}

TEST_CASE("count_roots: contour through a root is rejected") {
    region::RegionParams p{0.5, 1.0};
    const double root = oracles::bisect(
        [](double s) { return std::sqrt(s) - std::exp(-s); }, 1e-6, 1.0, 1e-14);
    // right edge passes essentially through the real characteristic root
    region::RootCountWindow w{0.01, root, -1.0, 1.0, 1e-3};
    CHECK_THROWS_AS(region::count_roots({1.0, 0.0}, p, w), ContourTooCloseError);
}

TEST_CASE("window validation") {
    region::RegionParams p{0.5, 1.0};
    CHECK_THROWS_AS(region::count_roots({1.0, 0.0}, p, {2.0, 1.0, -1.0, 1.0, 1e-3}),
                    DomainError);
    CHECK_THROWS_AS(region::count_roots({1.0, 0.0}, p, {-0.5, 1.0, -1.0, 1.0, 1e-3}),
                    DomainError);
    CHECK_THROWS_AS(region::count_roots({1.0, 0.0}, p, {0.1, 1.0, -1.0, 1.0, 0.0}),
                    DomainError);
}

TEST_CASE("count_rhp_roots agrees with in_region on a small probe set") {
    for (double alpha : {0.4, 0.7}) {
        region::RegionParams p{alpha, 1.0};
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> uth(alpha * kPi / 2 + 0.05, kPi);
        std::uniform_real_distribution<double> uf(0.4, 1.6);
        int checked = 0;
        for (int i = 0; i < 24 && checked < 12; ++i) {
            const double th = uth(rng);
            const double r = std::pow((th - alpha * kPi / 2) / p.tau, alpha) * uf(rng);
            const cplx lam = std::polar(r, th);
            const auto verdict = region::in_region(lam, p);
            if (std::abs(verdict.margin_to_boundary) < 0.05) continue;
            ++checked;
            const int roots = region::count_rhp_roots(lam, p);
            INFO("alpha ", alpha, " lam ", lam.real(), "+", lam.imag(), "i");
            CHECK(verdict.member == (roots == 0));
        }
        CHECK(checked >= 10);
    }
}
