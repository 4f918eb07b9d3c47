#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fradelay {

using cplx = std::complex<double>;

// Built-in perturbation families g(x, y). Every built-in except
// linear_perturb satisfies g(0,0)=0 with a vanishing local Lipschitz
// modulus (hypotheses H1/H2) and ships an analytic bound for l_g(rho),
// valid on the complex ball of radius rho.
//
//   zero:            g = 0
//   quadratic:       g_i = c_i (x_i^2 + y_i^2)          l(rho) = 2 rho max|c|
//   cubic:           g_i = c_i (x_i^3 + y_i^3)          l(rho) = 3 rho^2 max|c|
//   sine:            g_i = c_i (x_i - sin x_i + y_i - sin y_i)
//                                                       l(rho) = (cosh(rho)-1) max|c|
//   linear_perturb:  g = B y  (flagged non-H2)          l(rho) = ||B||_inf
//   custom:          user functor; declared bound or Monte-Carlo estimate
struct NonlinearitySpec {
    enum class Kind : std::uint8_t { zero, quadratic, cubic, sine, linear_perturb, custom };

    Kind kind = Kind::zero;
    int dim = 1;
    std::vector<double> params;  // per-component coefficients; d*d matrix for linear_perturb

    using Fn = std::function<void(std::span<const cplx>, std::span<const cplx>, std::span<cplx>)>;
    Fn custom_fn;                                     // custom only
    std::function<double(double)> custom_lips_bound;  // optional declared analytic bound

    void validate() const;
    bool is_h2() const;

    void eval(std::span<const cplx> x, std::span<const cplx> y, std::span<cplx> out) const;

    static NonlinearitySpec make(const std::string& kind_name, int dim,
                                 std::vector<double> params);
};

}  // namespace fradelay
