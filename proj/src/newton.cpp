#include "harvest/newton.hpp"

#include <algorithm>
#include <cmath>

#include "harvest/errors.hpp"

namespace harvest {

double semilinear_residual(const SparseOperator& op, const Reaction& reaction, std::span<const double> v,
                           std::span<double> out) {
    const std::size_t n = op.n();
    std::vector<double> value(n), slope(n), kv(n);
    reaction(v, value, slope);
    op.multiply(v, kv);
    const auto m = op.mass();
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = value[i] - kv[i] / m[i];
        sup = std::max(sup, std::abs(out[i]));
    }
    return std::isfinite(sup) ? sup : HUGE_VAL;
}

void solve_linearized(const SparseOperator& op, std::span<const double> slope, std::span<const double> rhs,
                      std::span<double> x, double tol, LinearSolver solver) {
    const std::size_t n = op.n();
    const auto m = op.mass();
    std::vector<double> weights(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        weights[i] = -m[i] * slope[i];
        b[i] = m[i] * rhs[i];
    }
    if (solver == LinearSolver::ConjugateGradient) {
        cg_solve(op, 1.0, weights, b, x, tol);
    } else {
        minres_solve(op, 1.0, weights, b, x, tol);
    }
}

NewtonResult newton_solve(const SparseOperator& op, const Reaction& reaction, std::vector<double> guess,
                          const NewtonOptions& options, LinearSolver solver, double residual_scale) {
    const std::size_t n = op.n();
    NewtonResult result;
    result.u = std::move(guess);
    if (result.u.size() != n) throw Error(ErrorKind::DimensionMismatch, "Newton guess has wrong size");

    std::vector<double> f(n), trial(n), trial_f(n), du(n), value(n), slope(n);
    double res = residual_scale * semilinear_residual(op, reaction, result.u, f);
    result.residual = res;
    while (true) {
        if (res <= options.tol && result.iterations >= options.min_iterations) {
            result.converged = true;
            return result;
        }
        if (result.iterations >= options.max_iterations) {
            result.failure = "Newton: residual " + format_number(res) + " after " +
                             std::to_string(result.iterations) + " iterations";
            return result;
        }
        ++result.iterations;
        reaction(result.u, value, slope);
        // F + J du = 0 with J = -M^{-1}(K - M diag(slope)).
        std::fill(du.begin(), du.end(), 0.0);
        try {
            solve_linearized(op, slope, f, du, options.linear_tol, solver);
        } catch (const Error& e) {
            result.failure = std::string("Newton linear solve failed: ") + e.what();
            return result;
        }
        double step = 1.0;
        double trial_res = HUGE_VAL;
        while (step >= options.min_damping) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = result.u[i] + step * du[i];
            trial_res = residual_scale * semilinear_residual(op, reaction, trial, trial_f);
            if (trial_res <= (1.0 - 1e-4 * step) * res) break;
            if (res <= options.tol && trial_res <= res) break;  // polishing an already converged iterate
            step *= 0.5;
        }
        if (step < options.min_damping) {
            result.failure = "Newton: line search failed at residual " + format_number(res);
            return result;
        }
        result.u.swap(trial);
        f.swap(trial_f);
        res = trial_res;
        result.residual = res;
    }
}

}  // namespace harvest
