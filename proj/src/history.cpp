#include "fradelay/history.hpp"

#include <algorithm>
#include <cmath>

#include "fradelay/errors.hpp"

namespace fradelay {

void HistoryFunction::validate() const {
    if (dim < 1) throw DomainError("history: dimension must be positive");
    if (!(tau > 0.0)) throw DomainError("history: tau must be positive");
    switch (kind) {
        case Kind::constant:
        case Kind::polynomial:
            if (coeffs.size() != static_cast<std::size_t>(dim))
                throw DomainError("history: need one coefficient row per component");
            for (const auto& row : coeffs)
                if (row.empty()) throw DomainError("history: empty coefficient row");
            break;
        case Kind::sampled: {
            if (grid.size() < 2) throw DomainError("history: sampled kind needs >= 2 nodes");
            if (!std::is_sorted(grid.begin(), grid.end()))
                throw DomainError("history: sample grid must be ascending");
            if (grid.front() > -tau + 1e-12 || grid.back() < -1e-12)
                throw DomainError("history: sample grid must cover [-tau, 0]");
            if (samples.size() != grid.size())
                throw DomainError("history: one sample vector per grid node");
            for (const auto& v : samples)
                if (v.size() != static_cast<std::size_t>(dim))
                    throw DomainError("history: sample dimension mismatch");
            break;
        }
    }
}

void HistoryFunction::eval(double t, std::span<cplx> out) const {
    switch (kind) {
        case Kind::constant:
            for (int c = 0; c < dim; ++c) out[c] = coeffs[c][0];
            return;
        case Kind::polynomial:
            for (int c = 0; c < dim; ++c) {
                cplx acc{0.0, 0.0};
                for (std::size_t j = coeffs[c].size(); j-- > 0;) acc = acc * t + coeffs[c][j];
                out[c] = acc;
            }
            return;
        case Kind::sampled: {
            const double x = std::clamp(t, grid.front(), grid.back());
            auto it = std::upper_bound(grid.begin(), grid.end(), x);
            std::size_t i = static_cast<std::size_t>(it - grid.begin());
            if (i == 0) i = 1;
            if (i >= grid.size()) i = grid.size() - 1;
            const double w = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
            for (int c = 0; c < dim; ++c)
                out[c] = samples[i - 1][c] + w * (samples[i][c] - samples[i - 1][c]);
            return;
        }
    }
}

double HistoryFunction::sup_norm(int probes) const {
    std::vector<cplx> buf(static_cast<std::size_t>(dim));
    double best = 0.0;
    for (int i = 0; i <= probes; ++i) {
        const double t = -tau + tau * static_cast<double>(i) / probes;
        eval(t, buf);
        for (const auto& v : buf) best = std::max(best, std::abs(v));
    }
    if (kind == Kind::sampled) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (const auto& v : samples[i]) best = std::max(best, std::abs(v));
    }
    return best;
}

HistoryFunction HistoryFunction::constant(std::vector<cplx> value, double tau) {
    HistoryFunction h;
    h.kind = Kind::constant;
    h.dim = static_cast<int>(value.size());
    h.tau = tau;
    for (auto& v : value) h.coeffs.push_back({v});
    h.validate();
    return h;
}

HistoryFunction HistoryFunction::polynomial(std::vector<std::vector<cplx>> coeffs, double tau) {
    HistoryFunction h;
    h.kind = Kind::polynomial;
    h.dim = static_cast<int>(coeffs.size());
    h.tau = tau;
    h.coeffs = std::move(coeffs);
    h.validate();
    return h;
}

HistoryFunction HistoryFunction::sampled(std::vector<double> grid,
                                         std::vector<std::vector<cplx>> samples, double tau) {
    HistoryFunction h;
    h.kind = Kind::sampled;
    h.dim = samples.empty() ? 0 : static_cast<int>(samples.front().size());
    h.tau = tau;
    h.grid = std::move(grid);
    h.samples = std::move(samples);
    h.validate();
    return h;
}

}  // namespace fradelay
