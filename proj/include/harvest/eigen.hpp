#pragma once

#include <span>

#include "harvest/grid.hpp"
#include "harvest/operators.hpp"

namespace harvest {

struct PrincipalPair {
    double lambda1;
    ScalarField phi;  // positive, sup-norm 1
    double phi_min;
    int iterations;
    double residual;
};

// Smallest eigenvalue of -div(a grad .) - mu with its positive eigenvector,
// by inverse iteration at the shift min(-mu) - 1, which keeps the shifted
// operator positive definite. `tol` bounds both the eigen-residual (mass
// weighted 2-norm, relative to |phi|) and the last eigenvalue increment.
// `initial` overrides the all-ones start vector; it must be positive.
PrincipalPair principal_eigenpair(const SparseOperator& op, const ScalarField& mu, double tol = 1e-9,
                                  std::span<const double> initial = {}, int max_iterations = 20000);

}  // namespace harvest
