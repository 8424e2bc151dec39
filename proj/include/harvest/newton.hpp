#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "harvest/operators.hpp"

namespace harvest {

// Nodal reaction r(v) and its derivative r'(v). The semilinear problems
// solved here all read  -div(a grad v) + r(v) = 0  at every node.
using Reaction = std::function<void(std::span<const double> v, std::span<double> value, std::span<double> slope)>;

enum class LinearSolver { ConjugateGradient, Minres };

struct NewtonOptions {
    double tol = 1e-8;  // on residual_scale * sup-norm of the nodal residual
    int max_iterations = 50;
    double linear_tol = 1e-8;
    double min_damping = 1.0 / 1024.0;
    // Iterations taken even when the guess already meets tol; a time step
    // started from a near-equilibrium state would otherwise not move at all.
    int min_iterations = 0;
};

struct NewtonResult {
    std::vector<double> u;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string failure;
};

// Nodal residual F(v) = -M^{-1} K v + r(v); returns its sup-norm.
double semilinear_residual(const SparseOperator& op, const Reaction& reaction, std::span<const double> v,
                           std::span<double> out);

// Damped Newton with Armijo backtracking on the residual sup-norm. Failure is
// reported through NewtonResult, never thrown, so callers decide whether it is
// an error (steady solves) or a cue to retry (time steps, bisection).
NewtonResult newton_solve(const SparseOperator& op, const Reaction& reaction, std::vector<double> guess,
                          const NewtonOptions& options, LinearSolver solver, double residual_scale = 1.0);

// Solves the symmetric Newton system (K - M diag(slope)) x = M rhs.
void solve_linearized(const SparseOperator& op, std::span<const double> slope, std::span<const double> rhs,
                      std::span<double> x, double tol, LinearSolver solver);

}  // namespace harvest
