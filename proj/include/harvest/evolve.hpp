#pragma once

#include <iosfwd>
#include <vector>

#include "harvest/model.hpp"
#include "harvest/newton.hpp"
#include "harvest/thresholds.hpp"

namespace harvest {

// Regularised harvesting threshold: 0 below zero, 1 above eps, cubic
// smoothstep in between (C^1, nondecreasing).
struct RhoSpec {
    double eps = 0.01;
};

double rho(const RhoSpec& spec, double s);
double rho_derivative(const RhoSpec& spec, double s);

struct StepOptions {
    double tol = 1e-11;  // on dt * sup-norm of the implicit-equation residual
    double linear_tol = 1e-12;
    int max_newton = 30;
    int max_halvings = 8;
};

// One backward-Euler step of  u_t = div(a grad u) + u(mu - nu u) - harvest(x) rho(u)
// over dt. A failed Newton solve splits the step into two halves, recursively,
// at most max_halvings deep. Throws StepFailed.
ScalarField step_with_harvest(const Model& model, std::span<const double> harvest, const RhoSpec& spec,
                              const ScalarField& u, double dt, const StepOptions& options = {});

// Autonomous forcing harvest(x) = delta h(x).
ScalarField step(const Model& model, double delta, const RhoSpec& spec, const ScalarField& u, double dt,
                 const StepOptions& options = {});

enum class Outcome { ConvergedToSteady, CollapsedBelowEps0, MaxTimeReached };
const char* to_string(Outcome outcome);

struct TrajectorySample {
    double t;
    double sup_norm;
    double min;
    double max;
};

struct EvolutionResult {
    std::vector<TrajectorySample> samples;
    ScalarField final_state;
    Outcome classification;
    double steady_residual;       // harvested steady residual of final_state
    double max_pointwise_increase; // max over steps and nodes of u(t+dt) - u(t)
    double min_value;             // smallest nodal value seen along the run
    double final_time;
};

struct EvolveOptions {
    double t_max = 200.0;
    double dt = 0.05;
    double tol_steady = 1e-6;
    double tol_rate = 1e-6;
    double sample_interval = 0.0;  // 0: every step
    StepOptions step{};
};

// Integrates from the unharvested state p and classifies the outcome.
// Throws InvalidEps when 2 eps nu_hi / phi_min >= -lambda1 / 2.
EvolutionResult run_from_p(const Model& model, const ScalarField& p, double delta, const RhoSpec& spec,
                           const ThresholdReport& report, const EvolveOptions& options = {});

// Same integration from an arbitrary start, with collapse level eps0.
EvolutionResult evolve_from(const Model& model, const ScalarField& u0, double delta, const RhoSpec& spec,
                            double eps0, const EvolveOptions& options = {});

void write_trajectory_csv(std::ostream& out, const EvolutionResult& result);

}  // namespace harvest
