#include "harvest/periodic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "harvest/errors.hpp"

namespace harvest {

ScalarField average_forcing(const ForcingSpec& spec, const Domain& domain) {
    constexpr int intervals = 64;
    const double hs = 1.0 / intervals;
    return sample(domain, [&](const Point& x) {
        double sum = 0.0;
        for (int k = 0; k <= intervals; ++k) {
            const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            sum += w * spec.g(k * hs, x);
        }
        return spec.delta * sum * hs / 3.0;
    });
}

namespace {

void require_bounded(const Model& model) {
    if (model.domain().kind() != BoundaryKind::BoundedNeumann) {
        throw Error(ErrorKind::InvalidDomain, "time-periodic forcing is only supported on bounded (Neumann) domains");
    }
}

// Integrates one trajectory step by step; `visit(k, t, u)` sees every state.
template <typename Visit>
ScalarField integrate(const Model& model, const ForcingSpec& spec, const ScalarField& u0, double t0, double t_span,
                      const FlowOptions& o, Visit&& visit) {
    require_bounded(model);
    if (!(spec.omega > 0.0)) throw Error(ErrorKind::ConfigError, "forcing frequency omega must be positive");
    const double period = spec.period();
    const double dt_req = o.dt > 0.0 ? o.dt : period / o.steps_per_period;
    const long steps = std::max(1L, std::lround(std::ceil(t_span / dt_req - 1e-9)));
    const double dt = t_span / steps;
    if (dt > period / 32.0 * (1.0 + 1e-12)) {
        throw Error(ErrorKind::ConfigError, "dt = " + format_number(dt) + " does not resolve the forcing period (T/32)");
    }
    const Domain& d = model.domain();
    std::vector<Point> coords(d.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = d.coords(i);
    std::vector<double> harvest(d.size());

    ScalarField u = u0;
    visit(0L, t0, u);
    for (long k = 0; k < steps; ++k) {
        const double t_mid = t0 + (k + 0.5) * dt;
        double s = spec.omega * t_mid;
        s -= std::floor(s);
        for (std::size_t i = 0; i < harvest.size(); ++i) harvest[i] = spec.delta * spec.g(s, coords[i]);
        u = step_with_harvest(model, harvest, o.rho, u, dt, o.step);
        visit(k + 1, t0 + (k + 1) * dt, u);
    }
    return u;
}

}  // namespace

ScalarField flow(const Model& model, const ForcingSpec& spec, const ScalarField& u0, double t0, double t_span,
                 const FlowOptions& options) {
    return integrate(model, spec, u0, t0, t_span, options, [](long, double, const ScalarField&) {});
}

FloquetEstimate dominant_floquet(const Model& model, const ForcingSpec& spec, const ScalarField& u,
                                 const OrbitOptions& o, std::span<const double> start) {
    const std::size_t n = u.size();
    const auto m = model.mass();
    const double period = spec.period();
    const ScalarField pu = flow(model, spec, u, 0.0, period, o.flow);
    const double eta = 1e-6 * std::max(sup_norm(u.values()), 1e-12);

    std::vector<double> v(n, 1.0);
    if (start.size() == n) v.assign(start.begin(), start.end());
    double previous = HUGE_VAL;
    FloquetEstimate est{0.0, {}};
    for (int it = 0; it < o.floquet_iterations; ++it) {
        std::vector<double> shifted(n);
        for (std::size_t i = 0; i < n; ++i) shifted[i] = u[i] + eta * v[i];
        const ScalarField ps = flow(model, spec, ScalarField(model.domain(), std::move(shifted)), 0.0, period, o.flow);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = (ps[i] - pu[i]) / eta;
        const double magnitude = weighted_norm(m, w) / weighted_norm(m, v);
        const double sign = weighted_dot(m, v, w) < 0.0 ? -1.0 : 1.0;
        est.multiplier = sign * magnitude;
        const double peak = sup_norm(w);
        if (peak == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) v[i] = sign * w[i] / peak;
        if (std::abs(magnitude - previous) <= o.floquet_tol * std::max(1.0, magnitude)) break;
        previous = magnitude;
    }
    est.mode = std::move(v);
    return est;
}

PeriodicOrbit find_orbit(const Model& model, const ForcingSpec& spec, const ScalarField& q_guess,
                         const OrbitOptions& o) {
    require_bounded(model);
    const std::size_t n = q_guess.size();
    const auto m = model.mass();
    const double period = spec.period();

    ScalarField u = q_guess;
    std::optional<FloquetEstimate> dominant;
    if (o.deflate_dominant) dominant = dominant_floquet(model, spec, u, o);
    bool deflate = dominant && dominant->multiplier > 0.0 && dominant->multiplier < 1.0;

    // A residual r bounds the fixed-point error only by r / (1 - c); once the
    // residual is below tol, keep iterating while it still improves, aiming at
    // tol (1 - c), and return the best iterate.
    const double c_abs = dominant ? std::min(std::abs(dominant->multiplier), 0.999) : 0.0;
    const double polish_tol = o.tol * (1.0 - c_abs);

    double res = HUGE_VAL, previous = HUGE_VAL;
    int it = 0;
    bool converged = false;
    std::optional<ScalarField> best;
    double best_res = HUGE_VAL;
    while (true) {
        ScalarField pu = flow(model, spec, u, 0.0, period, o.flow);
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = pu[i] - u[i];
        res = sup_norm(r);
        if (converged && res >= best_res) break;  // polishing stalled
        if (res <= o.tol) {
            converged = true;
            best = u;
            best_res = res;
            if (res <= polish_tol) break;
        }
        if (it >= o.max_iterations) break;
        ++it;
        if (deflate && res > 1.5 * previous) deflate = false;
        previous = res;
        if (deflate) {
            // Plain map step plus removal of the slow component:
            // e_1 -> c e_1 - c e_1 = 0 along the dominant mode.
            const auto& psi = dominant->mode;
            const double c = dominant->multiplier;
            const double coef = weighted_dot(m, psi, r) / weighted_dot(m, psi, psi) * c / (1.0 - c);
            for (std::size_t i = 0; i < n; ++i) pu[i] += coef * psi[i];
        }
        u = std::move(pu);
    }
    if (converged) {
        u = std::move(*best);
        res = best_res;
    }
    if (!converged) {
        throw Error(ErrorKind::NotConverged, "Poincare iteration at omega = " + format_number(spec.omega) +
                                                 ": residual " + format_number(res) + " after " + std::to_string(it) +
                                                 " iterations");
    }
    const FloquetEstimate fl =
        dominant_floquet(model, spec, u, o, dominant ? std::span<const double>(dominant->mode) : std::span<const double>());
    return PeriodicOrbit{std::move(u), spec.omega, res, fl.multiplier,
                         std::abs(fl.multiplier - 1.0) > o.hyperbolic_tol, it};
}

OrbitProfile orbit_profile(const Model& model, const ForcingSpec& spec, const ScalarField& u0,
                           const FlowOptions& options) {
    const auto m = model.mass();
    double total_mass = 0.0;
    for (double w : m) total_mass += w;
    const double period = spec.period();
    const double dt_req = options.dt > 0.0 ? options.dt : period / options.steps_per_period;
    const long steps = std::max(1L, std::lround(std::ceil(period / dt_req - 1e-9)));

    OrbitProfile prof{HUGE_VAL, -HUGE_VAL, 0.0, {}};
    double previous_mean = 0.0;
    integrate(model, spec, u0, 0.0, period, options, [&](long k, double, const ScalarField& u) {
        const FieldStats s = field_stats(u);
        prof.min = std::min(prof.min, s.min);
        prof.max = std::max(prof.max, s.max);
        const double mean = weighted_dot(m, u.values(), std::vector<double>(u.size(), 1.0)) / total_mass;
        if (k > 0) prof.time_mean += 0.5 * (mean + previous_mean) / steps;
        previous_mean = mean;
        for (int q = 0; q < 4; ++q) {
            if (k == (q * steps + 2) / 4 && prof.snapshots.size() == static_cast<std::size_t>(q)) {
                prof.snapshots.push_back(u);
            }
        }
    });
    return prof;
}

std::vector<OmegaRow> omega_sweep(const Model& model, const ForcingSpec& spec_template,
                                  const std::vector<double>& omega_list, const ScalarField& q,
                                  const OrbitOptions& options, int threads) {
    std::vector<double> omegas = omega_list;
    std::sort(omegas.begin(), omegas.end());
    std::vector<OmegaRow> rows(omegas.size());
    auto solve_row = [&](std::size_t i) {
        OmegaRow row;
        row.omega = omegas[i];
        try {
            ForcingSpec spec = spec_template;
            spec.omega = omegas[i];
            const PeriodicOrbit orbit = find_orbit(model, spec, q, options);
            std::vector<double> diff(q.size());
            for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = orbit.u0[j] - q[j];
            const OrbitProfile prof = orbit_profile(model, spec, orbit.u0, options.flow);
            row.converged = true;
            row.period_residual = orbit.period_residual;
            row.dist_to_q = sup_norm(diff);
            row.orbit_min = prof.min;
            row.orbit_max = prof.max;
            row.floquet = orbit.floquet_dominant;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows[i] = std::move(row);
    };
    unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(omegas.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < omegas.size(); i = next++) solve_row(i);
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    return rows;
}

void write_omega_csv(std::ostream& out, const std::vector<OmegaRow>& rows) {
    out << "omega,period_residual,dist_to_q,orbit_min,orbit_max,floquet\n";
    for (const auto& r : rows) {
        if (!r.converged) {
            out << format_number(r.omega) << ",nan,nan,nan,nan,nan\n";
            continue;
        }
        out << format_number(r.omega) << ',' << format_number(r.period_residual) << ','
            << format_number(r.dist_to_q) << ',' << format_number(r.orbit_min) << ','
            << format_number(r.orbit_max) << ',' << format_number(r.floquet) << '\n';
    }
}

}  // namespace harvest
