#include "harvest/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "harvest/errors.hpp"

namespace harvest {

namespace {

struct Rayleigh {
    double lambda;
    double residual;
};

// Rayleigh quotient and residual of (K - M mu) x = lambda M x in nodal form.
Rayleigh rayleigh(const SparseOperator& op, std::span<const double> mu, std::span<const double> x,
                  std::vector<double>& kx) {
    const auto m = op.mass();
    op.multiply(x, kx);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += x[i] * kx[i] - m[i] * mu[i] * x[i] * x[i];
        den += m[i] * x[i] * x[i];
    }
    const double lambda = num / den;
    double res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = kx[i] / m[i] - mu[i] * x[i] - lambda * x[i];
        res += m[i] * r * r;
    }
    return {lambda, std::sqrt(res / den)};
}

}  // namespace

PrincipalPair principal_eigenpair(const SparseOperator& op, const ScalarField& mu, double tol,
                                  std::span<const double> initial, int max_iterations) {
    if (!(mu.domain() == op.domain())) {
        throw Error(ErrorKind::DimensionMismatch, "mu and operator live on different domains");
    }
    const std::size_t n = op.n();
    const auto m = op.mass();
    const auto muv = mu.values();

    const double sigma = -*std::max_element(muv.begin(), muv.end()) - 1.0;
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) weights[i] = m[i] * (-muv[i] - sigma);

    std::vector<double> x(n, 1.0);
    if (!initial.empty()) {
        if (initial.size() != n) throw Error(ErrorKind::DimensionMismatch, "initial vector has wrong size");
        std::copy(initial.begin(), initial.end(), x.begin());
        const double s = sup_norm(x);
        for (auto& v : x) v /= s;
    }

    std::vector<double> kx(n), rhs(n), y(n);
    Rayleigh rq = rayleigh(op, muv, x, kx);
    // Gershgorin bound on the shifted matrix scaled by the mass; rounding caps
    // the attainable relative residual of each inner solve at about
    // eps * norm / (lambda - sigma), so the inner tolerance never asks for less.
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm = std::max(norm, (2.0 * op.diagonal()[i] + weights[i]) / m[i]);
    int it = 0;
    bool converged = false;
    while (it < max_iterations) {
        ++it;
        const double gap = std::max(rq.lambda - sigma, 1e-300);
        const double scale = 1.0 / gap;
        const double floor = 4.0 * std::numeric_limits<double>::epsilon() * norm / gap;
        const double solve_tol = std::min(1e-6, std::max(1e-3 * tol / std::max(1.0, gap), floor));
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = m[i] * x[i];
            y[i] = x[i] * scale;
        }
        cg_solve(op, 1.0, weights, rhs, y, solve_tol);
        // Normalise to sup-norm 1 at every iterate.
        double peak = 0.0;
        for (double v : y) {
            if (std::abs(v) > std::abs(peak)) peak = v;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / peak;
        const double previous = rq.lambda;
        rq = rayleigh(op, muv, x, kx);
        if (rq.residual <= tol && std::abs(rq.lambda - previous) <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw Error(ErrorKind::NotConverged, "inverse iteration: residual " + format_number(rq.residual) +
                                                 " after " + std::to_string(it) + " iterations");
    }
    const double phi_min = *std::min_element(x.begin(), x.end());
    if (!(phi_min > 0.0)) {
        throw Error(ErrorKind::NonPositiveEigenvector,
                    "principal eigenvector has a non-positive entry (min " + format_number(phi_min) + ")");
    }
    return PrincipalPair{rq.lambda, ScalarField(op.domain(), std::move(x)), phi_min, it, rq.residual};
}

}  // namespace harvest
