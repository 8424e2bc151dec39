#include "harvest/steady.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "harvest/eigen.hpp"
#include "harvest/errors.hpp"

namespace harvest {

Reaction harvested_reaction(const Model& model, double delta) {
    const auto mu = model.coeffs.mu.values();
    const auto nu = model.coeffs.nu.values();
    const auto h = model.coeffs.h.values();
    return [mu, nu, h, delta](std::span<const double> v, std::span<double> value, std::span<double> slope) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            value[i] = v[i] * (mu[i] - nu[i] * v[i]) - delta * h[i];
            slope[i] = mu[i] - 2.0 * nu[i] * v[i];
        }
    };
}

double harvested_residual(const Model& model, double delta, std::span<const double> u, std::span<double> out) {
    return semilinear_residual(model.op, harvested_reaction(model, delta), u, out);
}

double harvested_residual(const Model& model, double delta, const ScalarField& u) {
    std::vector<double> out(u.size());
    return harvested_residual(model, delta, u.values(), out);
}

SteadyState solve_unharvested(const Model& model, const NewtonOptions& options) {
    const auto& c = model.coeffs;
    const double mu_sup = field_stats(c.mu).sup_norm;
    const double eps_init = 1e-3 * mu_sup / c.nu_lo;
    std::vector<double> guess(model.op.n());
    for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = std::max(c.mu[i] / c.nu[i], eps_init);

    NewtonResult r = newton_solve(model.op, harvested_reaction(model, 0.0), std::move(guess), options,
                                  LinearSolver::Minres);
    const double peak = sup_norm(r.u);
    const double floor = 1e-6 * std::max(mu_sup, 1e-300) / c.nu_hi;
    if (peak < floor) {
        throw Error(ErrorKind::NoPositiveState, "unharvested iterate collapses to zero (lambda1 >= 0 regime)");
    }
    if (!r.converged) throw Error(ErrorKind::NotConverged, r.failure);
    if (!(*std::min_element(r.u.begin(), r.u.end()) > 0.0)) {
        throw Error(ErrorKind::NoPositiveState, "unharvested Newton converged to a sign-changing state");
    }
    return SteadyState{ScalarField(model.domain(), std::move(r.u)), 0.0, r.residual, std::nullopt};
}

SteadyState solve_harvested(const Model& model, double delta, const ScalarField& initial_guess,
                            const NewtonOptions& options) {
    if (!(initial_guess.domain() == model.domain())) {
        throw Error(ErrorKind::DimensionMismatch, "initial guess lives on a different domain");
    }
    const auto g = initial_guess.values();
    NewtonResult r = newton_solve(model.op, harvested_reaction(model, delta), std::vector<double>(g.begin(), g.end()),
                                  options, LinearSolver::Minres);
    if (!r.converged) throw Error(ErrorKind::NotConverged, "delta = " + format_number(delta) + ": " + r.failure);
    return SteadyState{ScalarField(model.domain(), std::move(r.u)), delta, r.residual, std::nullopt};
}

double stability(const Model& model, const ScalarField& u, double tol, std::span<const double> initial) {
    const auto& c = model.coeffs;
    std::vector<double> slope(u.size());
    for (std::size_t i = 0; i < slope.size(); ++i) slope[i] = c.mu[i] - 2.0 * c.nu[i] * u[i];
    return principal_eigenpair(model.op, ScalarField(model.domain(), std::move(slope)), tol, initial).lambda1;
}

bool is_hyperbolic(double sigma1, double hyperbolic_tol) { return std::abs(sigma1) >= hyperbolic_tol; }

const char* to_string(BranchStatus status) {
    switch (status) {
    case BranchStatus::Complete: return "complete";
    case BranchStatus::NotConverged: return "not-converged";
    case BranchStatus::StepsExhausted: return "steps-exhausted";
    }
    return "unknown";
}

namespace {

// Arclength metric: mean-square over the grid (mass weighted) plus delta^2.
struct Metric {
    std::vector<double> w;

    explicit Metric(std::span<const double> mass) : w(mass.begin(), mass.end()) {
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& v : w) v /= total;
    }
    double dot(std::span<const double> a, std::span<const double> b) const {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
        return s;
    }
    double norm(std::span<const double> du, double dd) const { return std::sqrt(dot(du, du) + dd * dd); }
};

struct Tangent {
    std::vector<double> u;
    double delta;
};

struct CorrectorResult {
    bool converged = false;
    int iterations = 0;
    std::vector<double> u;
    double delta = 0.0;
};

CorrectorResult correct(const Model& model, const Metric& metric, std::span<const double> u0, double delta0,
                        const Tangent& t, double ds, const ContinuationOptions& opt) {
    const std::size_t n = model.op.n();
    const auto& c = model.coeffs;
    CorrectorResult out;
    out.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.u[i] = u0[i] + ds * t.u[i];
    out.delta = delta0 + ds * t.delta;

    std::vector<double> f(n), slope(n), a(n, 0.0), b(n, 0.0), diff(n);
    constexpr int max_corrector = 8;
    for (int it = 0; it <= max_corrector; ++it) {
        const double res = harvested_residual(model, out.delta, out.u, f);
        for (std::size_t i = 0; i < n; ++i) diff[i] = out.u[i] - u0[i];
        const double arc = metric.dot(t.u, diff) + t.delta * (out.delta - delta0) - ds;
        if (res <= opt.tol && std::abs(arc) <= 1e-10 * std::max(1.0, ds)) {
            out.converged = true;
            return out;
        }
        if (it == max_corrector || !std::isfinite(res)) break;
        ++out.iterations;
        for (std::size_t i = 0; i < n; ++i) slope[i] = c.mu[i] - 2.0 * c.nu[i] * out.u[i];
        // Bordering: (K - M slope) du + M h ddelta = M F,  <t_u, du> + t_d ddelta = -arc.
        try {
            std::fill(a.begin(), a.end(), 0.0);
            solve_linearized(model.op, slope, f, a, opt.linear_tol, LinearSolver::Minres);
            solve_linearized(model.op, slope, c.h.values(), b, opt.linear_tol, LinearSolver::Minres);
        } catch (const Error&) {
            break;
        }
        const double denom = t.delta - metric.dot(t.u, b);
        if (denom == 0.0 || !std::isfinite(denom)) break;
        const double dd = (-arc - metric.dot(t.u, a)) / denom;
        for (std::size_t i = 0; i < n; ++i) out.u[i] += a[i] - b[i] * dd;
        out.delta += dd;
    }
    return out;
}

double rms(const Metric& metric, std::span<const double> u) { return std::sqrt(metric.dot(u, u)); }

}  // namespace

FoldReport trace_branches(const Model& model, const ContinuationOptions& opt) {
    const std::size_t n = model.op.n();
    const auto& c = model.coeffs;
    const Metric metric(model.mass());

    NewtonOptions newton;
    newton.tol = opt.tol;
    newton.linear_tol = opt.linear_tol;
    SteadyState p = solve_unharvested(model, newton);

    FoldReport report{0.0, std::nullopt, {}, BranchStatus::Complete, {}, p.u, 0.0};
    const double scale = std::max(1.0, rms(metric, p.u.values()));
    double ds = opt.initial_step > 0.0 ? opt.initial_step : 0.02 * scale;
    const double ds_max = opt.max_step > 0.0 ? opt.max_step : 0.1 * scale;

    std::vector<double> eigvec;
    auto make_point = [&](double delta, std::vector<double> u, double s, bool upper) {
        BranchPoint bp{delta, ScalarField(model.domain(), std::move(u)), s, upper, std::nullopt};
        if (opt.compute_stability) {
            std::vector<double> slope(n);
            for (std::size_t i = 0; i < n; ++i) slope[i] = c.mu[i] - 2.0 * c.nu[i] * bp.u[i];
            auto pair = principal_eigenpair(model.op, ScalarField(model.domain(), std::move(slope)), opt.eigen_tol,
                                            eigvec);
            eigvec.assign(pair.phi.values().begin(), pair.phi.values().end());
            bp.sigma1 = pair.lambda1;
            bp.stable = pair.lambda1 > 0.0;
        }
        return bp;
    };

    report.branch.push_back(make_point(0.0, std::vector<double>(p.u.values().begin(), p.u.values().end()), 0.0, true));

    // Initial tangent from the implicit-function derivative du/ddelta = -(K - M slope)^{-1} M h.
    Tangent t{std::vector<double>(n, 0.0), 1.0};
    {
        std::vector<double> slope(n), b(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) slope[i] = c.mu[i] - 2.0 * c.nu[i] * p.u[i];
        solve_linearized(model.op, slope, c.h.values(), b, opt.linear_tol, LinearSolver::Minres);
        for (std::size_t i = 0; i < n; ++i) t.u[i] = -b[i];
        const double norm = metric.norm(t.u, 1.0);
        for (auto& v : t.u) v /= norm;
        t.delta = 1.0 / norm;
    }

    double s = 0.0;
    if (opt.delta_floor > 0.0) {
        // Anchor the upper branch at delta_floor, the same level the lower
        // branch lands on, so both delta -> 0 limits are sampled.
        std::vector<double> guess(n);
        for (std::size_t i = 0; i < n; ++i) guess[i] = p.u[i] + opt.delta_floor * t.u[i] / t.delta;
        NewtonResult r = newton_solve(model.op, harvested_reaction(model, opt.delta_floor), std::move(guess), newton,
                                      LinearSolver::Minres);
        if (r.converged) {
            std::vector<double> diff(n);
            for (std::size_t i = 0; i < n; ++i) diff[i] = r.u[i] - p.u[i];
            s = metric.norm(diff, opt.delta_floor);
            report.branch.push_back(make_point(opt.delta_floor, std::move(r.u), s, true));
        }
    }

    bool passed_fold = false;
    bool landed = false;
    int successes = 0;
    int steps = 0;
    while (!landed) {
        if (steps >= opt.max_steps) {
            report.status = BranchStatus::StepsExhausted;
            report.message = "continuation stopped after " + std::to_string(steps) + " steps";
            break;
        }
        ++steps;
        const BranchPoint& last = report.branch.back();
        const auto u0 = last.u.values();
        const double d0 = last.delta;

        std::vector<double> new_u;
        double new_delta = 0.0;
        bool ok = false;
        int iterations = 0;
        if (passed_fold && d0 + ds * t.delta < opt.delta_floor) {
            // Land exactly on delta_floor instead of overshooting past zero.
            const double frac = (opt.delta_floor - d0) / t.delta;
            std::vector<double> guess(n);
            for (std::size_t i = 0; i < n; ++i) guess[i] = u0[i] + frac * t.u[i];
            NewtonResult r = newton_solve(model.op, harvested_reaction(model, opt.delta_floor), std::move(guess),
                                          newton, LinearSolver::Minres);
            if (r.converged) {
                std::vector<double> diff(n);
                for (std::size_t i = 0; i < n; ++i) diff[i] = r.u[i] - u0[i];
                if (metric.norm(diff, opt.delta_floor - d0) <= 2.0 * ds) {
                    ok = true;
                    landed = true;
                    new_u = std::move(r.u);
                    new_delta = opt.delta_floor;
                    iterations = r.iterations;
                }
            }
        } else {
            CorrectorResult r = correct(model, metric, u0, d0, t, ds, opt);
            if (r.converged) {
                std::vector<double> diff(n);
                for (std::size_t i = 0; i < n; ++i) diff[i] = r.u[i] - (u0[i] + ds * t.u[i]);
                // Reject corrections that wander as far as the step itself.
                if (metric.norm(diff, r.delta - (d0 + ds * t.delta)) <= ds) {
                    ok = true;
                    new_u = std::move(r.u);
                    new_delta = r.delta;
                    iterations = r.iterations;
                }
            }
        }

        if (!ok) {
            successes = 0;
            ds *= 0.5;
            if (ds < opt.min_step) {
                report.status = BranchStatus::NotConverged;
                report.message = "corrector failed at delta = " + format_number(d0) + " with minimal step";
                break;
            }
            continue;
        }

        std::vector<double> secant(n);
        for (std::size_t i = 0; i < n; ++i) secant[i] = new_u[i] - u0[i];
        const double step_len = metric.norm(secant, new_delta - d0);
        report.max_step = std::max(report.max_step, step_len);
        s += step_len;
        Tangent next{std::move(secant), (new_delta - d0) / step_len};
        for (auto& v : next.u) v /= step_len;
        if (!passed_fold && next.delta < 0.0) passed_fold = true;
        t = std::move(next);

        report.branch.push_back(make_point(new_delta, std::move(new_u), s, !passed_fold));
        if (new_delta > opt.delta_max) {
            report.status = BranchStatus::StepsExhausted;
            report.message = "branch exceeded delta_max";
            break;
        }
        if (passed_fold && new_delta <= opt.delta_floor) break;

        if (iterations <= 4 && ++successes >= 3) {
            ds = std::min(1.3 * ds, ds_max);
            successes = 0;
        }
    }

    // Fold location: bisection in delta from the branch sample with the largest delta.
    const auto top = std::max_element(report.branch.begin(), report.branch.end(),
                                      [](const BranchPoint& x, const BranchPoint& y) { return x.delta < y.delta; });
    if (!passed_fold) {
        report.delta_star = top->delta;
        if (report.status == BranchStatus::Complete) {
            report.status = BranchStatus::NotConverged;
            report.message = "fold not reached";
        }
        return report;
    }
    const std::size_t k = static_cast<std::size_t>(top - report.branch.begin());
    double lo = top->delta;
    ScalarField fold_u = top->u;
    double estimate = lo;
    if (k > 0 && k + 1 < report.branch.size()) {
        // Vertex of the parabola through the three samples around the maximum.
        const double s0 = report.branch[k - 1].arclength, s1 = report.branch[k].arclength,
                     s2 = report.branch[k + 1].arclength;
        const double d0 = report.branch[k - 1].delta, d1 = report.branch[k].delta, d2 = report.branch[k + 1].delta;
        const double c1 = (d1 - d0) / (s1 - s0), c2 = (d2 - d1) / (s2 - s1);
        const double curv = (c2 - c1) / (s2 - s0);
        if (curv < 0.0) {
            const double sv = 0.5 * (s0 + s1) - c1 / (2.0 * curv);
            estimate = std::max(lo, d0 + c1 * (sv - s0) + curv * (sv - s0) * (sv - s1));
        }
    }

    NewtonOptions bis = newton;
    bis.max_iterations = 80;
    auto attempt = [&](double delta, const ScalarField& guess) -> std::optional<ScalarField> {
        const auto g = guess.values();
        NewtonResult r = newton_solve(model.op, harvested_reaction(model, delta),
                                      std::vector<double>(g.begin(), g.end()), bis, LinearSolver::Minres);
        if (!r.converged || !(*std::min_element(r.u.begin(), r.u.end()) > 0.0)) return std::nullopt;
        return ScalarField(model.domain(), std::move(r.u));
    };

    double hi = std::max(estimate, lo) * (1.0 + 2.0 * opt.fold_rel_tol);
    for (int expand = 0; expand < 40; ++expand) {
        auto r = attempt(hi, fold_u);
        if (!r) break;
        lo = hi;
        fold_u = std::move(*r);
        hi *= 1.01;
    }
    while (hi - lo > opt.fold_rel_tol * lo) {
        const double mid = 0.5 * (lo + hi);
        if (auto r = attempt(mid, fold_u)) {
            lo = mid;
            fold_u = std::move(*r);
        } else {
            hi = mid;
        }
    }
    report.delta_star = lo;
    report.u_at_fold = std::move(fold_u);
    return report;
}

void write_branch_csv(std::ostream& out, const FoldReport& report) {
    out << "arclength,delta,sup_norm_u,sigma1,stable\n";
    for (const auto& bp : report.branch) {
        out << format_number(bp.arclength) << ',' << format_number(bp.delta) << ','
            << format_number(sup_norm(bp.u.values())) << ','
            << (bp.sigma1 ? format_number(*bp.sigma1) : std::string("nan")) << ',' << (bp.stable ? 1 : 0) << '\n';
    }
}

}  // namespace harvest
