#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "harvest/evolve.hpp"
#include "harvest/model.hpp"

namespace harvest {

// f(omega t, x) = delta g(omega t, x), with g 1-periodic in its first argument.
struct ForcingSpec {
    std::function<double(double s, const Point& x)> g;
    double delta = 0.0;
    double omega = 1.0;

    double period() const { return 1.0 / omega; }
};

// delta * int_0^1 g(s, x) ds per node, composite Simpson with 65 samples.
ScalarField average_forcing(const ForcingSpec& spec, const Domain& domain);

struct FlowOptions {
    double dt = 0.0;  // 0: period / steps_per_period
    int steps_per_period = 64;
    RhoSpec rho{};
    StepOptions step{};
};

// Backward-Euler flow of the time-periodic problem from time t0 over t_span;
// the forcing is frozen at each step midpoint. dt must resolve the period
// (dt <= T/32). Bounded domains only.
ScalarField flow(const Model& model, const ForcingSpec& spec, const ScalarField& u0, double t0, double t_span,
                 const FlowOptions& options = {});

struct PeriodicOrbit {
    ScalarField u0;  // state at phase 0
    double omega = 0.0;
    double period_residual;   // |P(u0) - u0|_inf
    double floquet_dominant;  // dominant multiplier of the linearised map
    bool hyperbolic;
    int iterations;
};

struct OrbitOptions {
    double tol = 1e-9;
    int max_iterations = 200;
    double floquet_tol = 1e-6;
    int floquet_iterations = 60;
    double hyperbolic_tol = 1e-3;
    // Removes the dominant Floquet component of the fixed-point error at each
    // iteration; without it the iteration contracts only by that multiplier.
    bool deflate_dominant = true;
    FlowOptions flow{};
};

struct FloquetEstimate {
    double multiplier;
    std::vector<double> mode;
};

// Power iteration on v -> (P(u + eta v) - P(u)) / eta, eta = 1e-6 |u|_inf.
FloquetEstimate dominant_floquet(const Model& model, const ForcingSpec& spec, const ScalarField& u,
                                 const OrbitOptions& options, std::span<const double> start = {});

// Fixed point of the time-T map started at q_guess. Throws NotConverged.
PeriodicOrbit find_orbit(const Model& model, const ForcingSpec& spec, const ScalarField& q_guess,
                         const OrbitOptions& options = {});

struct OrbitProfile {
    double min;          // over nodes and one period
    double max;
    double time_mean;    // time average of the spatial mean
    std::vector<ScalarField> snapshots;  // phases 0, T/4, T/2, 3T/4
};

OrbitProfile orbit_profile(const Model& model, const ForcingSpec& spec, const ScalarField& u0,
                           const FlowOptions& options = {});

struct OmegaRow {
    double omega = 0.0;
    bool converged = false;
    double period_residual = 0.0;
    double dist_to_q = 0.0;
    double orbit_min = 0.0;
    double orbit_max = 0.0;
    double floquet = 0.0;
    std::string error;
};

std::vector<OmegaRow> omega_sweep(const Model& model, const ForcingSpec& spec_template,
                                  const std::vector<double>& omega_list, const ScalarField& q,
                                  const OrbitOptions& options = {}, int threads = 1);

void write_omega_csv(std::ostream& out, const std::vector<OmegaRow>& rows);

}  // namespace harvest
