#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace fradelay {

using cplx = std::complex<double>;

// The initial function phi on [-tau, 0].
struct HistoryFunction {
    enum class Kind : std::uint8_t { constant, polynomial, sampled };

    Kind kind = Kind::constant;
    int dim = 1;
    double tau = 1.0;

    // constant: coeffs[c][0]
    // polynomial: value_c(t) = sum_j coeffs[c][j] t^j, t in [-tau, 0]
    std::vector<std::vector<cplx>> coeffs;

    // sampled: ascending grid covering [-tau, 0], linear interpolation
    std::vector<double> grid;
    std::vector<std::vector<cplx>> samples;  // samples[i] is the d-vector at grid[i]

    void validate() const;
    void eval(double t, std::span<cplx> out) const;
    double sup_norm(int probes = 257) const;  // max-norm over a probe grid incl. knots

    static HistoryFunction constant(std::vector<cplx> value, double tau);
    static HistoryFunction polynomial(std::vector<std::vector<cplx>> coeffs, double tau);
    static HistoryFunction sampled(std::vector<double> grid,
                                   std::vector<std::vector<cplx>> samples, double tau);
};

}  // namespace fradelay
