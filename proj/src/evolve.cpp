#include "harvest/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "harvest/errors.hpp"
#include "harvest/steady.hpp"

namespace harvest {

double rho(const RhoSpec& spec, double s) {
    if (s <= 0.0) return 0.0;
    if (s >= spec.eps) return 1.0;
    const double x = s / spec.eps;
    return x * x * (3.0 - 2.0 * x);
}

double rho_derivative(const RhoSpec& spec, double s) {
    if (s <= 0.0 || s >= spec.eps) return 0.0;
    const double x = s / spec.eps;
    return 6.0 * x * (1.0 - x) / spec.eps;
}

namespace {

bool try_step(const Model& model, std::span<const double> harvest, const RhoSpec& spec, std::vector<double>& u,
              double dt, const StepOptions& o) {
    const auto& c = model.coeffs;
    const auto mu = c.mu.values();
    const auto nu = c.nu.values();
    const std::vector<double> old = u;
    // Backward Euler written as  -div(a grad v) + r(v) = 0  with
    // r(v) = (u_old - v)/dt + v(mu - nu v) - harvest rho(v).
    Reaction reaction = [&](std::span<const double> v, std::span<double> value, std::span<double> slope) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            value[i] = (old[i] - v[i]) / dt + v[i] * (mu[i] - nu[i] * v[i]) - harvest[i] * rho(spec, v[i]);
            slope[i] = -1.0 / dt + mu[i] - 2.0 * nu[i] * v[i] - harvest[i] * rho_derivative(spec, v[i]);
        }
    };
    NewtonOptions n;
    n.tol = o.tol * std::max(1.0, sup_norm(old));
    n.linear_tol = o.linear_tol;
    n.max_iterations = o.max_newton;
    n.min_iterations = 1;
    NewtonResult r = newton_solve(model.op, reaction, old, n, LinearSolver::ConjugateGradient, dt);
    if (!r.converged) return false;
    u = std::move(r.u);
    return true;
}

bool step_recursive(const Model& model, std::span<const double> harvest, const RhoSpec& spec, std::vector<double>& u,
                    double dt, const StepOptions& o, int depth) {
    if (try_step(model, harvest, spec, u, dt, o)) return true;
    if (depth >= o.max_halvings) return false;
    return step_recursive(model, harvest, spec, u, 0.5 * dt, o, depth + 1) &&
           step_recursive(model, harvest, spec, u, 0.5 * dt, o, depth + 1);
}

}  // namespace

ScalarField step_with_harvest(const Model& model, std::span<const double> harvest, const RhoSpec& spec,
                              const ScalarField& u, double dt, const StepOptions& options) {
    if (!(dt > 0.0)) throw Error(ErrorKind::StepFailed, "time step must be positive");
    if (!(u.domain() == model.domain()) || harvest.size() != u.size()) {
        throw Error(ErrorKind::DimensionMismatch, "state and model live on different domains");
    }
    std::vector<double> v(u.values().begin(), u.values().end());
    if (!step_recursive(model, harvest, spec, v, dt, options, 0)) {
        throw Error(ErrorKind::StepFailed, "backward Euler step failed after " + std::to_string(options.max_halvings) +
                                               " halvings of dt = " + format_number(dt));
    }
    return ScalarField(model.domain(), std::move(v));
}

ScalarField step(const Model& model, double delta, const RhoSpec& spec, const ScalarField& u, double dt,
                 const StepOptions& options) {
    std::vector<double> harvest(u.size());
    const auto h = model.coeffs.h.values();
    for (std::size_t i = 0; i < harvest.size(); ++i) harvest[i] = delta * h[i];
    return step_with_harvest(model, harvest, spec, u, dt, options);
}

const char* to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::ConvergedToSteady: return "ConvergedToSteady";
    case Outcome::CollapsedBelowEps0: return "CollapsedBelowEps0";
    case Outcome::MaxTimeReached: return "MaxTimeReached";
    }
    return "Unknown";
}

EvolutionResult evolve_from(const Model& model, const ScalarField& u0, double delta, const RhoSpec& spec,
                            double eps0, const EvolveOptions& o) {
    if (!(o.dt > 0.0) || !(o.t_max > 0.0)) throw Error(ErrorKind::StepFailed, "dt and t_max must be positive");
    const std::size_t n = u0.size();
    std::vector<double> harvest(n);
    for (std::size_t i = 0; i < n; ++i) harvest[i] = delta * model.coeffs.h[i];

    auto sample_of = [](double t, const ScalarField& u) {
        const FieldStats s = field_stats(u);
        return TrajectorySample{t, s.sup_norm, s.min, s.max};
    };

    EvolutionResult result{{}, u0, Outcome::MaxTimeReached, 0.0, -HUGE_VAL, field_stats(u0).min, 0.0};
    result.samples.push_back(sample_of(0.0, u0));
    const double interval = o.sample_interval > 0.0 ? o.sample_interval : o.dt;
    double next_sample = interval;
    const long steps = std::lround(std::ceil(o.t_max / o.dt - 1e-9));
    std::vector<double> residual(n);
    ScalarField u = u0;
    for (long k = 1; k <= steps; ++k) {
        ScalarField next = step_with_harvest(model, harvest, spec, u, o.dt, o.step);
        const double t = k * o.dt;
        double rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = next[i] - u[i];
            result.max_pointwise_increase = std::max(result.max_pointwise_increase, d);
            rate = std::max(rate, std::abs(d));
        }
        rate /= o.dt;
        u = std::move(next);
        const FieldStats s = field_stats(u);
        result.min_value = std::min(result.min_value, s.min);
        result.final_time = t;

        bool done = false;
        if (s.sup_norm < eps0) {
            result.classification = Outcome::CollapsedBelowEps0;
            done = true;
        } else if (s.min > spec.eps) {
            const double res = harvested_residual(model, delta, u.values(), residual);
            if (res < o.tol_steady && rate < o.tol_rate) {
                result.classification = Outcome::ConvergedToSteady;
                done = true;
            }
        }
        if (done || t >= next_sample - 1e-12 * interval || k == steps) {
            result.samples.push_back(sample_of(t, u));
            while (next_sample <= t + 1e-12 * interval) next_sample += interval;
        }
        if (done) break;
    }
    result.steady_residual = harvested_residual(model, delta, u.values(), residual);
    result.final_state = std::move(u);
    return result;
}

EvolutionResult run_from_p(const Model& model, const ScalarField& p, double delta, const RhoSpec& spec,
                           const ThresholdReport& report, const EvolveOptions& options) {
    if (!report.persistence) throw Error(ErrorKind::NoPositiveState, "run_from_p requires lambda1 < 0");
    const double eps0 = 2.0 * spec.eps * report.nu_hi / report.phi_min;
    if (!(spec.eps > 0.0) || !(eps0 < -report.lambda1 / 2.0)) {
        throw Error(ErrorKind::InvalidEps, "collapse level eps0 = " + format_number(eps0) +
                                               " must be below -lambda1/2 = " + format_number(-report.lambda1 / 2.0));
    }
    return evolve_from(model, p, delta, spec, eps0, options);
}

void write_trajectory_csv(std::ostream& out, const EvolutionResult& result) {
    out << "t,sup_norm,min,max\n";
    for (const auto& s : result.samples) {
        out << format_number(s.t) << ',' << format_number(s.sup_norm) << ',' << format_number(s.min) << ','
            << format_number(s.max) << '\n';
    }
}

}  // namespace harvest
