#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "harvest/grid.hpp"
#include "harvest/model.hpp"
#include "harvest/periodic.hpp"

namespace harvest {

// Closed set of coefficient expressions:
//   constant  {value}
//   cosine    {mean, amplitude, wavenumber}  mean + amplitude cos(2 pi wavenumber x1 / L1)
//   landscape {k, mu_plus, mu_minus, fraction}
//   file      {path}  (field file, relative to the config file)
struct FieldExpr {
    std::string type = "constant";
    double value = 1.0;
    double mean = 0.0;
    double amplitude = 0.0;
    double wavenumber = 1.0;
    LandscapeSpec landscape{};
    std::string path;
};

struct SolverConfig {
    double eigen_tol = 1e-9;
    double newton_tol = 1e-8;
    double cg_tol = 1e-8;
    double dt = 0.05;
    double t_max = 200.0;
    double tol_steady = 1e-6;
    double tol_rate = 1e-6;
    double orbit_tol = 1e-9;
    int orbit_max_iterations = 200;
    int steps_per_period = 64;
    int max_steps = 400;
    double delta_max = 1e6;
    double tau = 1e-8;
};

// g(s, x) = h(x) (1 + amplitude sin(2 pi s + phase)); "constant" drops the sine.
struct ForcingConfig {
    std::string type = "sine";
    double amplitude = 1.0;
    double phase = 0.0;
};

struct ExperimentConfig {
    double delta = 0.0;
    double eps = 0.01;
    double omega = 4.0;
    std::vector<int> k_list{1, 2, 3, 4, 5, 6};
    std::vector<double> omega_list{4.0, 8.0, 16.0, 32.0};
    ForcingConfig forcing{};
    bool compute_delta_star = false;
    bool compute_stability = false;
    int sweep_resolution = 128;
    double mu_plus = 10.0;
    double mu_minus = -1.0;
    double target_fraction = 0.5;
};

struct RunConfig {
    BoundaryKind kind = BoundaryKind::SpPeriodic;
    int dim = 2;
    std::vector<double> lengths{1.0, 1.0};
    std::vector<int> resolution{64, 64};
    FieldExpr a{};
    FieldExpr mu{};
    FieldExpr nu{};
    FieldExpr h{};
    SolverConfig solver{};
    ExperimentConfig experiment{};
    std::filesystem::path base_dir;
    std::string source_text;  // echoed verbatim into the run manifest
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"eigen",  "steady",   "branches",           "thresholds",
                                                "evolve", "periodic", "sweep-fragmentation", "sweep-omega"};
    return names;
}

// Parses the JSON config document. Throws ConfigError naming the offending
// field path (e.g. `solver.eigen_tol`).
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

Domain make_domain(const RunConfig& config);
ScalarField make_field(const RunConfig& config, const Domain& domain, const FieldExpr& expr, const std::string& name);
Model make_model(const RunConfig& config);
ForcingSpec make_forcing(const RunConfig& config, const Model& model, double omega);

// Full validation of the config for one experiment without running it;
// may run the eigensolver for hypotheses that depend on lambda1. Empty means
// runnable.
std::vector<std::string> validate(const RunConfig& config, const std::string& experiment);

}  // namespace harvest
