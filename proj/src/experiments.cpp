#include "harvest/experiments.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "harvest/eigen.hpp"
#include "harvest/errors.hpp"
#include "harvest/evolve.hpp"
#include "harvest/periodic.hpp"
#include "harvest/steady.hpp"
#include "harvest/thresholds.hpp"

namespace harvest {

using json = nlohmann::ordered_json;

int exit_status(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotConverged:
    case ErrorKind::NonPositiveEigenvector:
    case ErrorKind::NoPositiveState:
    case ErrorKind::StepsExhausted:
    case ErrorKind::StepFailed:
        return 2;
    default:
        return 1;
    }
}

namespace {

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// Collects the scalar summary and the list of written files for one run.
class Run {
public:
    Run(const RunConfig& config, std::string experiment, const RunContext& ctx)
        : config_(config), experiment_(std::move(experiment)), ctx_(ctx) {}

    void scalar(const std::string& key, double value, const std::string& shown) {
        values_[key] = value;
        line_ += " " + key + "=" + shown;
    }
    void text(const std::string& key, const std::string& value) {
        values_[key] = value;
        line_ += " " + key + "=" + value;
    }

    template <typename Writer>
    void file(const std::string& name, Writer&& write) {
        std::ofstream out(ctx_.out_dir / name, std::ios::binary);
        if (!out) throw Error(ErrorKind::ConfigError, "cannot write output file " + (ctx_.out_dir / name).string());
        write(out);
        files_.push_back(name);
    }

    void field(const std::string& stem, const ScalarField& f) {
        file(stem + ".csv", [&](std::ostream& o) { write_field_csv(o, f); });
        file(stem + ".pgm", [&](std::ostream& o) { write_field_pgm(o, f); });
    }

    void finish(std::ostream& out, int status) {
        json manifest;
        manifest["tool"] = "harvest";
        manifest["version"] = kVersion;
        manifest["experiment"] = experiment_;
        manifest["status"] = status;
        json cfg = json::parse(config_.source_text, nullptr, false);
        manifest["config"] = cfg.is_discarded() ? json(config_.source_text) : cfg;
        manifest["summary"] = values_;
        manifest["files"] = files_;
        std::ofstream m(ctx_.out_dir / (experiment_ + ".manifest.json"), std::ios::binary);
        m << manifest.dump(2) << '\n';
        if (!ctx_.quiet) out << experiment_ << ":" << line_ << '\n';
    }

private:
    const RunConfig& config_;
    std::string experiment_;
    const RunContext& ctx_;
    json values_ = json::object();
    std::vector<std::string> files_;
    std::string line_;
};

NewtonOptions newton_options(const RunConfig& c) {
    NewtonOptions n;
    n.tol = c.solver.newton_tol;
    n.linear_tol = c.solver.cg_tol;
    return n;
}

ContinuationOptions continuation_options(const RunConfig& c) {
    ContinuationOptions o;
    o.tol = c.solver.newton_tol;
    o.linear_tol = c.solver.cg_tol;
    o.max_steps = c.solver.max_steps;
    o.delta_max = c.solver.delta_max;
    o.eigen_tol = c.solver.eigen_tol;
    o.compute_stability = c.experiment.compute_stability;
    return o;
}

OrbitOptions orbit_options(const RunConfig& c) {
    OrbitOptions o;
    o.tol = c.solver.orbit_tol;
    o.max_iterations = c.solver.orbit_max_iterations;
    o.flow.steps_per_period = c.solver.steps_per_period;
    o.flow.rho.eps = c.experiment.eps;
    return o;
}

// Model whose harvest term delta*h is the time average of the forcing.
Model averaged_model(const Model& model, const ForcingSpec& forcing) {
    ScalarField avg = average_forcing(forcing, model.domain());
    for (auto& v : avg.values()) v /= forcing.delta;
    return make_model(make_coefficients(model.coeffs.a, model.coeffs.mu, model.coeffs.nu, std::move(avg)));
}

int run_eigen(const RunConfig& c, Run& r) {
    const Model model = make_model(c);
    const PrincipalPair pair = principal_eigenpair(model.op, model.coeffs.mu, c.solver.eigen_tol);
    r.scalar("lambda1", pair.lambda1, fixed4(pair.lambda1));
    r.scalar("phi_min", pair.phi_min, fixed4(pair.phi_min));
    r.scalar("residual", pair.residual, sci(pair.residual));
    r.file("eigen.csv", [&](std::ostream& o) {
        o << "lambda1,phi_min,iterations,residual\n"
          << format_number(pair.lambda1) << ',' << format_number(pair.phi_min) << ',' << pair.iterations << ','
          << format_number(pair.residual) << '\n';
    });
    r.field("phi", pair.phi);
    return 0;
}

int run_steady(const RunConfig& c, Run& r) {
    const Model model = make_model(c);
    const SteadyState p = solve_unharvested(model, newton_options(c));
    SteadyState s = p;
    if (c.experiment.delta > 0.0) s = solve_harvested(model, c.experiment.delta, p.u, newton_options(c));
    const double sigma = stability(model, s.u, c.solver.eigen_tol);
    const FieldStats st = field_stats(s.u);
    r.scalar("delta", s.delta, fixed4(s.delta));
    r.scalar("sup_norm", st.sup_norm, fixed4(st.sup_norm));
    r.scalar("min", st.min, fixed4(st.min));
    r.scalar("residual", s.residual_norm, sci(s.residual_norm));
    r.scalar("sigma1", sigma, fixed4(sigma));
    r.text("stable", sigma > 0.0 ? "yes" : "no");
    r.field("steady", s.u);
    return 0;
}

int run_branches(const RunConfig& c, Run& r) {
    const Model model = make_model(c);
    const FoldReport fold = trace_branches(model, continuation_options(c));
    r.scalar("delta_star", fold.delta_star, fixed4(fold.delta_star));
    r.scalar("points", static_cast<double>(fold.branch.size()), std::to_string(fold.branch.size()));
    r.text("status", to_string(fold.status));
    r.file("branch.csv", [&](std::ostream& o) { write_branch_csv(o, fold); });
    if (fold.u_at_fold) r.field("fold", *fold.u_at_fold);
    return fold.status == BranchStatus::Complete ? 0 : 2;
}

int run_thresholds(const RunConfig& c, Run& r) {
    const Model model = make_model(c);
    const PrincipalPair pair = principal_eigenpair(model.op, model.coeffs.mu, c.solver.eigen_tol);
    const ThresholdReport t = compute_thresholds(model.coeffs, pair, c.experiment.eps);
    r.scalar("lambda1", t.lambda1, fixed4(t.lambda1));
    r.scalar("phi_min", t.phi_min, fixed4(t.phi_min));
    r.scalar("delta1", t.delta1, fixed4(t.delta1));
    r.scalar("delta2", t.delta2, fixed4(t.delta2));
    r.scalar("kappa0", t.kappa0, fixed4(t.kappa0));
    r.scalar("eps0", t.eps0, fixed4(t.eps0));
    r.text("persistence", t.persistence ? "yes" : "no");
    r.file("thresholds.csv", [&](std::ostream& o) { write_thresholds_csv(o, t); });
    return 0;
}

int run_evolve(const RunConfig& c, Run& r) {
    const Model model = make_model(c);
    const PrincipalPair pair = principal_eigenpair(model.op, model.coeffs.mu, c.solver.eigen_tol);
    const ThresholdReport t = compute_thresholds(model.coeffs, pair, c.experiment.eps);
    const SteadyState p = solve_unharvested(model, newton_options(c));
    EvolveOptions o;
    o.dt = c.solver.dt;
    o.t_max = c.solver.t_max;
    o.tol_steady = c.solver.tol_steady;
    o.tol_rate = c.solver.tol_rate;
    const EvolutionResult e = run_from_p(model, p.u, c.experiment.delta, RhoSpec{c.experiment.eps}, t, o);
    const FieldStats st = field_stats(e.final_state);
    r.scalar("delta", c.experiment.delta, fixed4(c.experiment.delta));
    r.scalar("delta1", t.delta1, fixed4(t.delta1));
    r.scalar("delta2", t.delta2, fixed4(t.delta2));
    r.text("classification", to_string(e.classification));
    r.scalar("final_time", e.final_time, fixed4(e.final_time));
    r.scalar("sup_norm", st.sup_norm, fixed4(st.sup_norm));
    r.scalar("min_value", e.min_value, sci(e.min_value));
    r.file("trajectory.csv", [&](std::ostream& o2) { write_trajectory_csv(o2, e); });
    r.field("final", e.final_state);
    return 0;
}

int run_periodic(const RunConfig& c, Run& r, bool sweep, int threads) {
    const Model model = make_model(c);
    const ForcingSpec forcing = make_forcing(c, model, c.experiment.omega);
    const Model averaged = averaged_model(model, forcing);
    const SteadyState p = solve_unharvested(model, newton_options(c));
    const SteadyState q = solve_harvested(averaged, c.experiment.delta, p.u, newton_options(c));
    const double sigma = stability(averaged, q.u, c.solver.eigen_tol);
    r.scalar("q_sup_norm", sup_norm(q.u.values()), fixed4(sup_norm(q.u.values())));
    r.scalar("q_sigma1", sigma, fixed4(sigma));
    r.field("q", q.u);
    const OrbitOptions oo = orbit_options(c);

    if (sweep) {
        const auto rows = omega_sweep(model, forcing, c.experiment.omega_list, q.u, oo, threads);
        int converged = 0;
        double smallest = 0.0;
        for (const auto& row : rows) {
            if (!row.converged) continue;
            if (converged++ == 0) smallest = row.omega;
        }
        r.scalar("rows", static_cast<double>(rows.size()), std::to_string(rows.size()));
        r.scalar("converged", converged, std::to_string(converged));
        if (converged > 0) r.scalar("smallest_converged_omega", smallest, fixed4(smallest));
        r.file("omega_sweep.csv", [&](std::ostream& o) { write_omega_csv(o, rows); });
        return converged == static_cast<int>(rows.size()) ? 0 : 2;
    }

    const PeriodicOrbit orbit = find_orbit(model, forcing, q.u, oo);
    const OrbitProfile prof = orbit_profile(model, forcing, orbit.u0, oo.flow);
    std::vector<double> diff(q.u.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = orbit.u0[i] - q.u[i];
    r.scalar("omega", orbit.omega, fixed4(orbit.omega));
    r.scalar("period_residual", orbit.period_residual, sci(orbit.period_residual));
    r.scalar("dist_to_q", sup_norm(diff), sci(sup_norm(diff)));
    r.scalar("time_mean", prof.time_mean, fixed4(prof.time_mean));
    r.scalar("floquet", orbit.floquet_dominant, fixed4(orbit.floquet_dominant));
    r.text("hyperbolic", orbit.hyperbolic ? "yes" : "no");
    r.file("orbit.csv", [&](std::ostream& o) {
        const Domain& d = model.domain();
        o << "x,y,phase_0,phase_1,phase_2,phase_3\n";
        for (std::size_t i = 0; i < d.size(); ++i) {
            const Point pt = d.coords(i);
            o << format_number(pt[0]) << ',' << format_number(pt[1]);
            for (const auto& snap : prof.snapshots) o << ',' << format_number(snap[i]);
            o << '\n';
        }
    });
    return 0;
}

int run_fragmentation(const RunConfig& c, Run& r, int threads) {
    SweepOptions o;
    o.resolution = c.experiment.sweep_resolution;
    o.mu_plus = c.experiment.mu_plus;
    o.mu_minus = c.experiment.mu_minus;
    o.target_fraction = c.experiment.target_fraction;
    o.eps = c.experiment.eps;
    o.eigen_tol = c.solver.eigen_tol;
    o.compute_delta_star = c.experiment.compute_delta_star;
    o.continuation = continuation_options(c);
    o.threads = threads;
    const auto rows = fragmentation_sweep(c.experiment.k_list, o);
    int failed = 0;
    for (const auto& row : rows) failed += row.error.empty() ? 0 : 1;
    r.scalar("rows", static_cast<double>(rows.size()), std::to_string(rows.size()));
    r.scalar("failed", failed, std::to_string(failed));
    r.file("fragmentation.csv", [&](std::ostream& os) { write_sweep_csv(os, rows); });
    return failed == 0 ? 0 : 2;
}

}  // namespace

int run(const RunConfig& config, const std::string& experiment, const RunContext& ctx, std::ostream& out,
        std::ostream& err) {
    const auto diagnostics = validate(config, experiment);
    if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) err << "ConfigError: " << d << '\n';
        return 1;
    }
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    Run r(config, experiment, ctx);
    int status = 0;
    try {
        if (experiment == "eigen") status = run_eigen(config, r);
        else if (experiment == "steady") status = run_steady(config, r);
        else if (experiment == "branches") status = run_branches(config, r);
        else if (experiment == "thresholds") status = run_thresholds(config, r);
        else if (experiment == "evolve") status = run_evolve(config, r);
        else if (experiment == "periodic") status = run_periodic(config, r, false, ctx.threads);
        else if (experiment == "sweep-omega") status = run_periodic(config, r, true, ctx.threads);
        else if (experiment == "sweep-fragmentation") status = run_fragmentation(config, r, ctx.threads);
    } catch (const Error& e) {
        err << e.what() << '\n';
        status = exit_status(e.kind());
        r.text("error", to_string(e.kind()));
    }
    r.finish(out, status);
    return status;
}

}  // namespace harvest
