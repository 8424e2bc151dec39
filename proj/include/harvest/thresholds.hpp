#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "harvest/eigen.hpp"
#include "harvest/model.hpp"
#include "harvest/steady.hpp"

namespace harvest {

struct ThresholdReport {
    double lambda1;
    double phi_min;
    double alpha;  // min h
    double beta;   // max h
    double nu_lo;
    double nu_hi;
    double delta1;  // lambda1^2 phi_min / (beta nu_hi (1 + phi_min)^2)
    double delta2;  // lambda1^2 / (4 alpha nu_lo)
    double kappa0;  // -lambda1 / (nu_hi (1 + phi_min))
    double eps;
    double eps0;    // 2 eps nu_hi / phi_min
    // False when lambda1 >= 0: no positive bounded steady state exists and
    // delta1, kappa0 carry no meaning.
    bool persistence;
};

ThresholdReport compute_thresholds(const CoefficientSet& coeffs, const PrincipalPair& pair, double eps);

// Whether kappa0 * phi is a discrete sub-solution of the harvested steady
// equation at `delta`: min over nodes of the residual >= -tol_sub, with
// tol_sub = 1e-6 |mu|_inf |phi|_inf.
bool verify_subsolution(const Model& model, const PrincipalPair& pair, double delta);
double subsolution_margin(const Model& model, const PrincipalPair& pair, double delta);

struct SweepRow {
    int k = 0;
    double lambda1 = 0.0;
    double phi_min = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    std::optional<double> delta_star;
    std::string error;  // non-empty when the row failed
};

struct SweepOptions {
    int resolution = 128;
    double mu_plus = 10.0;
    double mu_minus = -1.0;
    double target_fraction = 0.5;
    double nu = 1.0;
    double h = 1.0;
    double a = 1.0;
    double eps = 0.01;
    double eigen_tol = 1e-9;
    bool compute_delta_star = false;
    ContinuationOptions continuation{};
    int threads = 1;  // 0: hardware concurrency
};

// Fragmented landscapes on the periodic unit cell, one row per k, sorted by k.
std::vector<SweepRow> fragmentation_sweep(const std::vector<int>& k_list, const SweepOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_thresholds_csv(std::ostream& out, const ThresholdReport& report);

}  // namespace harvest
