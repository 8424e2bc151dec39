#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "harvest/grid.hpp"
#include "harvest/model.hpp"
#include "harvest/newton.hpp"

namespace harvest {

struct SteadyState {
    ScalarField u;
    double delta = 0.0;
    double residual_norm = 0.0;
    std::optional<double> principal_linearization_eigenvalue;
};

// Nodal residual of  div(a grad u) + u(mu - nu u) - delta h  and its sup-norm.
double harvested_residual(const Model& model, double delta, std::span<const double> u, std::span<double> out);
double harvested_residual(const Model& model, double delta, const ScalarField& u);

Reaction harvested_reaction(const Model& model, double delta);

// Positive solution of  div(a grad p) + p(mu - nu p) = 0. Throws
// NoPositiveState when Newton collapses onto zero, NotConverged otherwise.
SteadyState solve_unharvested(const Model& model, const NewtonOptions& options = {});

// Solution of the harvested steady equation reached from `initial_guess`.
// Positivity is not enforced. Throws NotConverged.
SteadyState solve_harvested(const Model& model, double delta, const ScalarField& initial_guess,
                            const NewtonOptions& options = {});

// Smallest eigenvalue of the linearization -div(a grad .) - (mu - 2 nu u).
// Positive: linearly stable; negative: unstable; |sigma| < hyperbolic_tol: fold.
double stability(const Model& model, const ScalarField& u, double tol = 1e-9,
                 std::span<const double> initial = {});
bool is_hyperbolic(double sigma1, double hyperbolic_tol = 1e-3);

struct BranchPoint {
    double delta;
    ScalarField u;
    double arclength;
    bool stable;
    std::optional<double> sigma1;
};

enum class BranchStatus { Complete, NotConverged, StepsExhausted };
const char* to_string(BranchStatus status);

struct FoldReport {
    double delta_star = 0.0;
    std::optional<ScalarField> u_at_fold;
    std::vector<BranchPoint> branch;
    BranchStatus status = BranchStatus::Complete;
    std::string message;
    ScalarField unharvested;  // p, the branch origin
    double max_step = 0.0;    // largest arclength step taken
};

struct ContinuationOptions {
    double delta_max = 1e6;
    int max_steps = 400;
    double tol = 1e-8;          // Newton residual tolerance (sup-norm)
    double linear_tol = 1e-8;   // MINRES relative tolerance
    double initial_step = 0.0;  // 0: 2% of max(1, |p|_rms)
    double max_step = 0.0;      // 0: 10% of max(1, |p|_rms)
    double min_step = 1e-6;
    double delta_floor = 5e-4;  // lower-branch continuation stops below this delta
    double fold_rel_tol = 5e-4; // bisection accuracy for delta_star
    bool compute_stability = false;
    double eigen_tol = 1e-9;
};

// Pseudo-arclength continuation of the harvested steady states from (0, p)
// over the fold and down the lower branch to delta_floor.
FoldReport trace_branches(const Model& model, const ContinuationOptions& options = {});

void write_branch_csv(std::ostream& out, const FoldReport& report);

}  // namespace harvest
