#pragma once

#include <cmath>
#include <limits>

namespace fradelay {

// Gamma on the positive axis, accurate to >= 12 significant digits
// (glibc tgamma/lgamma are Lanczos/Stirling grade).
inline double gamma_fn(double x) { return std::tgamma(x); }

inline double log_gamma(double x) { return std::lgamma(x); }

// 1/Gamma(z) extended by its zeros at the poles z = 0, -1, -2, ...
inline double rgamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    double g = std::tgamma(x);
    if (!std::isfinite(g)) return 0.0;
    return 1.0 / g;
}

}  // namespace fradelay
