#include "fradelay/nonlinearity.hpp"

#include <cmath>
#include <stdexcept>

#include "fradelay/errors.hpp"

namespace fradelay {

void NonlinearitySpec::validate() const {
    if (dim < 1) throw DomainError("nonlinearity: dimension must be positive");
    switch (kind) {
        case Kind::zero:
            break;
        case Kind::quadratic:
        case Kind::cubic:
        case Kind::sine:
            if (params.size() != 1 && params.size() != static_cast<std::size_t>(dim))
                throw DomainError("nonlinearity: need 1 or d coefficients");
            break;
        case Kind::linear_perturb:
            if (params.size() != static_cast<std::size_t>(dim) * dim)
                throw DomainError("nonlinearity: linear_perturb needs a d*d matrix");
            break;
        case Kind::custom:
            if (!custom_fn) throw DomainError("nonlinearity: custom kind without functor");
            break;
    }
}

bool NonlinearitySpec::is_h2() const {
    return kind != Kind::linear_perturb;
}

namespace {
inline double coeff(const std::vector<double>& c, int i) {
    return c.size() == 1 ? c[0] : c[static_cast<std::size_t>(i)];
}
}  // namespace

void NonlinearitySpec::eval(std::span<const cplx> x, std::span<const cplx> y,
                            std::span<cplx> out) const {
    switch (kind) {
        case Kind::zero:
            for (int i = 0; i < dim; ++i) out[i] = {0.0, 0.0};
            return;
        case Kind::quadratic:
            for (int i = 0; i < dim; ++i) out[i] = coeff(params, i) * (x[i] * x[i] + y[i] * y[i]);
            return;
        case Kind::cubic:
            for (int i = 0; i < dim; ++i)
                out[i] = coeff(params, i) * (x[i] * x[i] * x[i] + y[i] * y[i] * y[i]);
            return;
        case Kind::sine:
            for (int i = 0; i < dim; ++i)
                out[i] = coeff(params, i) * ((x[i] - std::sin(x[i])) + (y[i] - std::sin(y[i])));
            return;
        case Kind::linear_perturb:
            for (int i = 0; i < dim; ++i) {
                cplx s{0.0, 0.0};
                for (int j = 0; j < dim; ++j)
                    s += params[static_cast<std::size_t>(i) * dim + j] * y[j];
                out[i] = s;
            }
            return;
        case Kind::custom:
            custom_fn(x, y, out);
            return;
    }
}

NonlinearitySpec NonlinearitySpec::make(const std::string& kind_name, int dim,
                                        std::vector<double> params) {
    NonlinearitySpec s;
    s.dim = dim;
    s.params = std::move(params);
    if (kind_name == "zero") s.kind = Kind::zero;
    else if (kind_name == "quadratic") s.kind = Kind::quadratic;
    else if (kind_name == "cubic") s.kind = Kind::cubic;
    else if (kind_name == "sine") s.kind = Kind::sine;
    else if (kind_name == "linear_perturb") s.kind = Kind::linear_perturb;
    else throw DomainError("nonlinearity: unknown kind '" + kind_name + "'");
    if (s.kind != Kind::zero && s.params.empty())
        throw DomainError("nonlinearity: kind '" + kind_name + "' needs coefficients");
    s.validate();
    return s;
}

}  // namespace fradelay
