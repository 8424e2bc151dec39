#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "harvest/grid.hpp"

namespace harvest {

// Discrete -div(a grad .) as a vertex-centred finite-volume operator.
//
// The stored matrix K is the symmetric stiffness matrix scaled by 1/cell_volume,
// so interior rows are the familiar (-1, 2, -1)/h^2 stencil. `mass` holds the
// lumped control-volume fractions (1 inside, 1/2 on bounded faces, 1/4 on
// corners); the operator acting on nodal values is mass^{-1} K, which equals the
// reflecting-ghost Neumann stencil. On periodic grids mass is identically 1.
class SparseOperator {
public:
    SparseOperator(Domain domain, std::vector<std::size_t> row_offsets,
                   std::vector<std::size_t> col_indices, std::vector<double> entries);

    const Domain& domain() const { return domain_; }
    std::size_t n() const { return row_offsets_.size() - 1; }
    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::size_t> col_indices() const { return col_indices_; }
    std::span<const double> entries() const { return entries_; }
    std::span<const double> mass() const { return mass_; }
    std::span<const double> diagonal() const { return diagonal_; }

    double entry(std::size_t i, std::size_t j) const;

    // y = K x (symmetric stiffness, no mass scaling).
    void multiply(std::span<const double> x, std::span<double> y) const;

private:
    Domain domain_;
    std::vector<std::size_t> row_offsets_;
    std::vector<std::size_t> col_indices_;
    std::vector<double> entries_;
    std::vector<double> mass_;
    std::vector<double> diagonal_;
};

SparseOperator assemble(const ScalarField& a);

// Nodal values of -div(a grad f).
ScalarField apply(const SparseOperator& op, const ScalarField& field);

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

// Solves (K + shift * diag(weights)) y = rhs with Jacobi-preconditioned CG.
// `x` carries the initial guess in and the solution out. Throws NotConverged on
// iteration exhaustion, on detected loss of positive definiteness, or when the
// true residual misses the tolerance.
SolveStats cg_solve(const SparseOperator& op, double shift, std::span<const double> weights,
                    std::span<const double> rhs, std::span<double> x, double tol,
                    int max_iterations = 0);

// Same system, symmetric but possibly indefinite: preconditioned MINRES.
SolveStats minres_solve(const SparseOperator& op, double shift, std::span<const double> weights,
                        std::span<const double> rhs, std::span<double> x, double tol,
                        int max_iterations = 0);

ScalarField solve_shifted(const SparseOperator& op, double shift, std::span<const double> weights,
                          const ScalarField& rhs, double tol);

// Mass-weighted inner product and norm on nodal vectors (grid quadrature).
double weighted_dot(std::span<const double> mass, std::span<const double> x, std::span<const double> y);
double weighted_norm(std::span<const double> mass, std::span<const double> x);
double sup_norm(std::span<const double> x);

}  // namespace harvest
