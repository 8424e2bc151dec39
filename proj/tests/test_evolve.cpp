#include <cmath>
#include <sstream>

#include <doctest.h>

#include "check_error.hpp"
#include "harvest/evolve.hpp"
#include "oracles.hpp"

using namespace harvest;

namespace {

Domain cell(int n) { return Domain(BoundaryKind::SpPeriodic, 2, {1, 1}, {n, n}); }

// Pointwise and sup-norm monotonicity between consecutive states.
struct DecayCheck {
    double worst = -1e300;
    void operator()(const ScalarField& before, const ScalarField& after) {
        for (std::size_t i = 0; i < before.size(); ++i) worst = std::max(worst, after[i] - before[i]);
    }
};

double max_dev(const ScalarField& u, double c) {
    double e = 0.0;
    for (double v : u.values()) e = std::max(e, std::abs(v - c));
    return e;
}

// Backward Euler on the homogeneous problem, compared with RK4.
double be_error(double dt) {
    const Model m = oracle::homogeneous_model(Domain(BoundaryKind::SpPeriodic, 1, {1, 1}, {4, 1}), 1.0, 1.0);
    const RhoSpec spec{0.01};
    const double delta = 0.1875, t_end = 2.0;
    ScalarField u = ScalarField::constant(m.domain(), 1.0);
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int k = 0; k < steps; ++k) u = step(m, delta, spec, u, dt);
    const double ref = oracle::rk4([&](double, double v) { return v * (1 - v) - delta * oracle::smoothstep(0.01, v); },
                                   1.0, 0.0, t_end, 20000);
    return std::abs(u[0] - ref);
}

}  // namespace

TEST_CASE("smoothstep threshold") {
    const RhoSpec s{0.1};
    CHECK(rho(s, -1.0) == 0.0);
    CHECK(rho(s, 0.0) == 0.0);
    CHECK(rho(s, 0.05) == doctest::Approx(0.5));
    CHECK(rho(s, 0.1) == 1.0);
    CHECK(rho(s, 3.0) == 1.0);
    CHECK(rho_derivative(s, 0.1) == doctest::Approx(0.0));
    CHECK(rho_derivative(s, 0.1 - 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rho_derivative(s, 0.1 + 1e-12) == 0.0);
    CHECK(rho_derivative(s, 0.0) == 0.0);
    // nondecreasing and matching an independent smoothstep
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = -0.05 + 0.2 * i / 200;
        CHECK(rho(s, x) >= prev);
        CHECK(rho(s, x) == doctest::Approx(oracle::smoothstep(0.1, x)).epsilon(1e-14));
        prev = rho(s, x);
    }
}

TEST_CASE("steady states and zero are fixed points of a step") {
    const Model m = oracle::landscape_model(2, 16);
    const SteadyState p = solve_unharvested(m);
    const ScalarField next = step(m, 0.0, RhoSpec{}, p.u, 0.1);
    for (std::size_t i = 0; i < next.size(); ++i) CHECK(next[i] == doctest::Approx(p.u[i]).epsilon(1e-8));

    const ScalarField zero = ScalarField::constant(m.domain(), 0.0);
    const ScalarField z = step(m, 0.5, RhoSpec{}, zero, 0.1);
    for (double v : z.values()) CHECK(std::abs(v) <= 1e-14);

    CHECK_ERROR_KIND(step(m, 0.0, RhoSpec{}, p.u, 0.0), ErrorKind::StepFailed);
}

TEST_CASE("homogeneous trajectory follows the scalar ODE") {
    const Model m = oracle::homogeneous_model(cell(6), 1.0, 1.0);
    EvolveOptions o;
    o.t_max = 50.0;
    o.dt = 0.01;
    o.tol_steady = 0.0;  // run to t_max
    o.tol_rate = 0.0;
    const EvolutionResult r = evolve_from(m, ScalarField::constant(m.domain(), 1.0), 0.1875, RhoSpec{0.01}, 0.0, o);
    CHECK(r.classification == Outcome::MaxTimeReached);
    CHECK(r.final_time == doctest::Approx(50.0));
    CHECK(max_dev(r.final_state, 0.75) <= 1e-4);
    const double ref = oracle::rk4([](double, double v) { return v * (1 - v) - 0.1875; }, 1.0, 0.0, 50.0, 50000);
    CHECK(std::abs(ref - 0.75) <= 1e-6);
}

TEST_CASE("backward Euler is first order") {
    const double e1 = be_error(0.1), e2 = be_error(0.05), e3 = be_error(0.025);
    INFO("errors ", e1, " ", e2, " ", e3);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
    CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("zero initial data stays zero") {
    const Model m = oracle::homogeneous_model(cell(6), 1.0, 1.0);
    EvolveOptions o;
    o.t_max = 5.0;
    const EvolutionResult r = evolve_from(m, ScalarField::constant(m.domain(), 0.0), 0.2, RhoSpec{0.01}, 0.0, o);
    CHECK(max_dev(r.final_state, 0.0) == 0.0);
    CHECK(r.min_value >= -1e-10);
}

TEST_CASE("dichotomy from the unharvested state") {
    const Model m = oracle::homogeneous_model(cell(8), 1.0, 1.0);
    const PrincipalPair pair = principal_eigenpair(m.op, m.coeffs.mu);
    const ThresholdReport rep = compute_thresholds(m.coeffs, pair, 0.01);
    const SteadyState p = solve_unharvested(m);

    const EvolutionResult below = run_from_p(m, p.u, 0.1875, RhoSpec{0.01}, rep);
    CHECK(below.classification == Outcome::ConvergedToSteady);
    CHECK(max_dev(below.final_state, 0.75) < 1e-3);

    const EvolutionResult above = run_from_p(m, p.u, 0.3, RhoSpec{0.01}, rep);
    CHECK(above.classification == Outcome::CollapsedBelowEps0);
    CHECK(sup_norm(above.final_state.values()) < rep.eps0);

    for (const EvolutionResult* r : {&below, &above}) {
        CHECK(r->max_pointwise_increase <= 1e-8);
        CHECK(r->min_value >= -1e-10);
        for (std::size_t k = 1; k < r->samples.size(); ++k)
            CHECK(r->samples[k].sup_norm <= r->samples[k - 1].sup_norm + 1e-8);
    }
}

TEST_CASE("fragmented landscape settles on the upper steady state") {
    const Model m = oracle::landscape_model(2, 24);
    const PrincipalPair pair = principal_eigenpair(m.op, m.coeffs.mu);
    const ThresholdReport rep = compute_thresholds(m.coeffs, pair, 0.01);
    const SteadyState p = solve_unharvested(m);
    const double delta = 0.5 * rep.delta1;
    const EvolutionResult r = run_from_p(m, p.u, delta, RhoSpec{0.01}, rep);
    REQUIRE(r.classification == Outcome::ConvergedToSteady);
    const SteadyState upper = solve_harvested(m, delta, p.u);
    double err = 0.0;
    for (std::size_t i = 0; i < upper.u.size(); ++i) err = std::max(err, std::abs(upper.u[i] - r.final_state[i]));
    CHECK(err < 1e-3);
    CHECK(r.max_pointwise_increase <= 1e-8);
    CHECK(r.min_value >= -1e-10);
}

TEST_CASE("without harvesting every positive start returns to p") {
    const Model m = oracle::landscape_model(2, 16);
    const SteadyState p = solve_unharvested(m);
    std::vector<ScalarField> starts;
    for (double f : {0.1, 2.0}) {
        std::vector<double> v(p.u.values().begin(), p.u.values().end());
        for (double& x : v) x *= f;
        starts.emplace_back(m.domain(), v);
    }
    starts.push_back(ScalarField::constant(m.domain(), 1.0));
    EvolveOptions o;
    o.t_max = 400.0;
    o.dt = 0.1;
    for (const ScalarField& u0 : starts) {
        const EvolutionResult r = evolve_from(m, u0, 0.0, RhoSpec{0.01}, 0.0, o);
        CHECK(r.classification == Outcome::ConvergedToSteady);
        double err = 0.0;
        for (std::size_t i = 0; i < p.u.size(); ++i) err = std::max(err, std::abs(p.u[i] - r.final_state[i]));
        CHECK(err < 1e-4);
        CHECK(r.min_value >= -1e-10);
    }
}

TEST_CASE("collapse level must respect the hypothesis") {
    const Model m = oracle::homogeneous_model(cell(6), 0.05, 1.0);
    const PrincipalPair pair = principal_eigenpair(m.op, m.coeffs.mu);
    // eps0 = 2 * 0.5 = 1 >= -lambda1 / 2 = 0.025
    const ThresholdReport rep = compute_thresholds(m.coeffs, pair, 0.5);
    const SteadyState p = solve_unharvested(m);
    CHECK_ERROR_KIND(run_from_p(m, p.u, 0.0001, RhoSpec{0.5}, rep), ErrorKind::InvalidEps);
}

TEST_CASE("trajectory CSV is reproducible") {
    const Model m = oracle::homogeneous_model(cell(6), 1.0, 1.0);
    EvolveOptions o;
    o.t_max = 3.0;
    std::ostringstream a, b;
    write_trajectory_csv(a, evolve_from(m, ScalarField::constant(m.domain(), 1.0), 0.2, RhoSpec{}, 0.0, o));
    write_trajectory_csv(b, evolve_from(m, ScalarField::constant(m.domain(), 1.0), 0.2, RhoSpec{}, 0.0, o));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("t,sup_norm,min,max\n", 0) == 0);
}
