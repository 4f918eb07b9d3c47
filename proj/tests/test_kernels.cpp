#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "fradelay/kernels.hpp"

using namespace fradelay;
using kernels::cplx;

namespace {

struct Data {
    std::vector<double> w;
    std::vector<cplx> x;
};

Data make_data(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Data d;
    d.w.resize(n);
    d.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.w[i] = u(rng);
        d.x[i] = {u(rng), u(rng)};
    }
    return d;
}

cplx naive_conv_rev(const double* w, const cplx* x, std::size_t n) {
    cplx s{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) s += w[j] * x[n - 1 - j];
    return s;
}

double naive_wabs(const double* w, const cplx* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w[j] * std::abs(x[j]);
    return s;
}

}  // namespace

TEST_CASE("scalar reference kernels match naive loops") {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 16u, 33u, 127u}) {
        Data d = make_data(n, 42 + n);
        const cplx a = kernels::scalar::conv_dot_rev(d.w.data(), d.x.data(), n);
        const cplx b = naive_conv_rev(d.w.data(), d.x.data(), n);
        CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
        const double c = kernels::scalar::weighted_abs_sum(d.w.data(), d.x.data(), n);
        CHECK(c == doctest::Approx(naive_wabs(d.w.data(), d.x.data(), n)).epsilon(1e-12));
    }
}

TEST_CASE("dispatched kernels agree with the scalar reference") {
    const auto saved = kernels::active_backend();
    for (std::size_t n : {1u, 4u, 5u, 64u, 101u, 1000u, 4097u}) {
        Data d = make_data(n, 1000 + n);
        const cplx ref = kernels::scalar::conv_dot_rev(d.w.data(), d.x.data(), n);
        const double ref2 = kernels::scalar::weighted_abs_sum(d.w.data(), d.x.data(), n);
        for (auto b : {kernels::Backend::scalar, kernels::Backend::avx2}) {
            if (!kernels::backend_available(b)) continue;
            kernels::force_backend(b);
            INFO("backend ", kernels::backend_name(b), " n ", n);
            const cplx got = kernels::conv_dot_rev(d.w.data(), d.x.data(), n);
            CHECK(std::abs(got - ref) <= 1e-11 * (1.0 + std::abs(ref)));
            const double got2 = kernels::weighted_abs_sum(d.w.data(), d.x.data(), n);
            CHECK(got2 == doctest::Approx(ref2).epsilon(1e-11));
        }
    }
    kernels::force_backend(saved);
}

#ifdef __x86_64__
TEST_CASE("avx2 tail handling around the 4-wide blocks") {
    if (kernels::backend_available(kernels::Backend::avx2)) {
        for (std::size_t n = 1; n <= 24; ++n) {
            Data d = make_data(n, 7 * n + 1);
            const cplx a = kernels::avx2::conv_dot_rev(d.w.data(), d.x.data(), n);
            const cplx b = kernels::scalar::conv_dot_rev(d.w.data(), d.x.data(), n);
            CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
            const double wa = kernels::avx2::weighted_abs_sum(d.w.data(), d.x.data(), n);
            const double wb = kernels::scalar::weighted_abs_sum(d.w.data(), d.x.data(), n);
            CHECK(wa == doctest::Approx(wb).epsilon(1e-12));
        }
    }
}
#endif

TEST_CASE("force_backend rejects unavailable targets") {
    if (!kernels::backend_available(kernels::Backend::avx2)) {
        CHECK_THROWS(kernels::force_backend(kernels::Backend::avx2));
    }
    kernels::force_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
}
