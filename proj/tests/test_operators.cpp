#include <cmath>
#include <random>

#include <doctest.h>

#include "check_error.hpp"
#include "harvest/operators.hpp"
#include "oracles.hpp"

using namespace harvest;
using oracle::pi;

namespace {

struct Manufactured {
    std::function<double(const Point&)> a, u, minus_div;
};

// -div(a grad u) in closed form for separable smooth a, u.
Manufactured periodic_case(int dim) {
    if (dim == 1) {
        return {[](const Point& x) { return 1 + 0.5 * std::cos(2 * pi * x[0]); },
                [](const Point& x) { return std::sin(2 * pi * x[0]); },
                [](const Point& x) {
                    const double a = 1 + 0.5 * std::cos(2 * pi * x[0]);
                    const double ax = -pi * std::sin(2 * pi * x[0]);
                    const double ux = 2 * pi * std::cos(2 * pi * x[0]);
                    const double uxx = -4 * pi * pi * std::sin(2 * pi * x[0]);
                    return -(ax * ux + a * uxx);
                }};
    }
    return {[](const Point& x) { return 1 + 0.25 * std::cos(2 * pi * x[0]) + 0.25 * std::cos(2 * pi * x[1]); },
            [](const Point& x) { return std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); },
            [](const Point& x) {
                const double a = 1 + 0.25 * std::cos(2 * pi * x[0]) + 0.25 * std::cos(2 * pi * x[1]);
                const double ax = -0.5 * pi * std::sin(2 * pi * x[0]);
                const double ay = -0.5 * pi * std::sin(2 * pi * x[1]);
                const double sx = std::sin(2 * pi * x[0]), sy = std::sin(2 * pi * x[1]);
                const double cx = std::cos(2 * pi * x[0]), cy = std::cos(2 * pi * x[1]);
                const double ux = 2 * pi * cx * sy, uy = 2 * pi * sx * cy;
                const double lap = -8 * pi * pi * sx * sy;
                return -(ax * ux + ay * uy + a * lap);
            }};
}

Manufactured bounded_case(int dim) {
    if (dim == 1) {
        return {[](const Point& x) { return 1 + 0.5 * std::cos(pi * x[0]); },
                [](const Point& x) { return std::cos(pi * x[0]); },
                [](const Point& x) {
                    const double a = 1 + 0.5 * std::cos(pi * x[0]);
                    const double ax = -0.5 * pi * std::sin(pi * x[0]);
                    const double ux = -pi * std::sin(pi * x[0]);
                    const double uxx = -pi * pi * std::cos(pi * x[0]);
                    return -(ax * ux + a * uxx);
                }};
    }
    return {[](const Point& x) { return 1 + 0.25 * std::cos(pi * x[0]) + 0.25 * std::cos(pi * x[1]); },
            [](const Point& x) { return std::cos(pi * x[0]) * std::cos(pi * x[1]); },
            [](const Point& x) {
                const double a = 1 + 0.25 * std::cos(pi * x[0]) + 0.25 * std::cos(pi * x[1]);
                const double ax = -0.25 * pi * std::sin(pi * x[0]);
                const double ay = -0.25 * pi * std::sin(pi * x[1]);
                const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
                const double cx = std::cos(pi * x[0]), cy = std::cos(pi * x[1]);
                const double ux = -pi * sx * cy, uy = -pi * cx * sy;
                const double lap = -2 * pi * pi * cx * cy;
                return -(ax * ux + ay * uy + a * lap);
            }};
}

double manufactured_error(BoundaryKind kind, int dim, int n) {
    const Manufactured m = kind == BoundaryKind::SpPeriodic ? periodic_case(dim) : bounded_case(dim);
    const Domain d(kind, dim, {1, 1}, {n, dim == 2 ? n : 1});
    const ScalarField a = sample(d, m.a);
    const ScalarField lu = apply(assemble(a), sample(d, m.u));
    double err = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) err = std::max(err, std::abs(lu[i] - m.minus_div(d.coords(i))));
    return err;
}

ScalarField random_field(const Domain& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(d.size());
    for (double& x : v) x = u(rng);
    return ScalarField(d, v);
}

ScalarField random_diffusion(const Domain& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::vector<double> v(d.size());
    for (double& x : v) x = u(rng);
    return ScalarField(d, v);
}

}  // namespace

TEST_CASE("unit diffusion on a periodic line is the circulant second difference") {
    const int n = 10;
    const Domain d(BoundaryKind::SpPeriodic, 1, {1, 1}, {n, 1});
    const SparseOperator op = assemble(ScalarField::constant(d, 1.0));
    const double h2 = d.spacing(0) * d.spacing(0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double expected = 0.0;
            if (i == j) expected = 2.0 / h2;
            else if ((i + 1) % n == j || (j + 1) % n == i) expected = -1.0 / h2;
            CHECK(op.entry(i, j) == doctest::Approx(expected).epsilon(1e-14));
        }
        CHECK(op.mass()[i] == 1.0);
    }
}

TEST_CASE("apply matches an independently written stencil") {
    std::mt19937_64 rng(7);
    for (auto kind : {BoundaryKind::SpPeriodic, BoundaryKind::BoundedNeumann}) {
        for (int dim : {1, 2}) {
            const Domain d(kind, dim, {1.0, 1.5}, {9, dim == 2 ? 7 : 1});
            const ScalarField a = random_diffusion(d, rng);
            const ScalarField f = random_field(d, rng);
            const ScalarField got = apply(assemble(a), f);
            const auto want = oracle::reference_apply(a, f);
            for (std::size_t i = 0; i < d.size(); ++i)
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("constants lie in the kernel and zero maps to zero") {
    std::mt19937_64 rng(3);
    for (auto kind : {BoundaryKind::SpPeriodic, BoundaryKind::BoundedNeumann}) {
        const Domain d(kind, 2, {1, 1}, {16, 16});
        const SparseOperator unit = assemble(ScalarField::constant(d, 1.0));
        CHECK(sup_norm(apply(unit, ScalarField::constant(d, 1.0)).values()) < 1e-12);
        // variable a: rounding relative to the largest stencil entry
        const SparseOperator op = assemble(random_diffusion(d, rng));
        CHECK(sup_norm(apply(op, ScalarField::constant(d, 3.0)).values()) < 1e-14 * 3 * sup_norm(op.diagonal()));
        CHECK(sup_norm(apply(op, ScalarField::constant(d, 0.0)).values()) == 0.0);
    }
}

TEST_CASE("second derivative of x^2 on a bounded grid") {
    const Domain d(BoundaryKind::BoundedNeumann, 1, {1, 1}, {21, 1});
    const ScalarField lu = apply(assemble(ScalarField::constant(d, 1.0)), sample(d, [](const Point& x) {
                                     return x[0] * x[0];
                                 }));
    for (int i = 1; i < 20; ++i) CHECK(lu[i] == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("apply is linear, symmetric and positive semidefinite") {
    std::mt19937_64 rng(11);
    for (auto kind : {BoundaryKind::SpPeriodic, BoundaryKind::BoundedNeumann}) {
        for (int dim : {1, 2}) {
            const Domain d(kind, dim, {1, 1}, {12, dim == 2 ? 12 : 1});
            const SparseOperator op = assemble(random_diffusion(d, rng));
            const auto m = op.mass();
            for (int trial = 0; trial < 5; ++trial) {
                const ScalarField f = random_field(d, rng);
                const ScalarField g = random_field(d, rng);
                std::vector<double> sum(d.size());
                for (std::size_t i = 0; i < d.size(); ++i) sum[i] = f[i] + g[i];
                const ScalarField lf = apply(op, f), lg = apply(op, g), ls = apply(op, ScalarField(d, sum));
                double scale = sup_norm(lf.values()) + sup_norm(lg.values());
                for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(ls[i] - lf[i] - lg[i]) <= 1e-14 * scale);

                // self-adjoint in the mass-weighted inner product
                const double fg = weighted_dot(m, lf.values(), g.values());
                const double gf = weighted_dot(m, f.values(), lg.values());
                CHECK(std::abs(fg - gf) <= 1e-12 * std::max(std::abs(fg), 1.0));
                CHECK(weighted_dot(m, lf.values(), f.values()) >= -1e-10 * weighted_dot(m, f.values(), f.values()));
            }
        }
    }
}

TEST_CASE("apply rejects fields from another domain") {
    const Domain d(BoundaryKind::SpPeriodic, 1, {1, 1}, {8, 1});
    const Domain e(BoundaryKind::SpPeriodic, 1, {1, 1}, {9, 1});
    const SparseOperator op = assemble(ScalarField::constant(d, 1.0));
    CHECK_ERROR_KIND(apply(op, ScalarField::constant(e, 1.0)), ErrorKind::DimensionMismatch);
}

TEST_CASE("manufactured solutions converge at second order") {
    for (auto kind : {BoundaryKind::SpPeriodic, BoundaryKind::BoundedNeumann}) {
        const bool periodic = kind == BoundaryKind::SpPeriodic;
        for (int dim : {1, 2}) {
            const int n0 = periodic ? 16 : 17;
            const double e1 = manufactured_error(kind, dim, n0);
            const double e2 = manufactured_error(kind, dim, periodic ? 2 * n0 : 2 * n0 - 1);
            const double e3 = manufactured_error(kind, dim, periodic ? 4 * n0 : 4 * n0 - 3);
            INFO(to_string(kind), " dim ", dim, " errors ", e1, " ", e2, " ", e3);
            CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.125));
            CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.125));
        }
    }
}

TEST_CASE("shifted CG solves") {
    const Domain d(BoundaryKind::SpPeriodic, 1, {1, 1}, {64, 1});
    const SparseOperator op = assemble(ScalarField::constant(d, 1.0));
    const std::vector<double> ones(d.size(), 1.0);
    const ScalarField y = solve_shifted(op, 1.0, ones, ScalarField::constant(d, 5.0), 1e-12);
    for (double v : y.values()) CHECK(v == doctest::Approx(5.0).epsilon(1e-10));

    std::mt19937_64 rng(5);
    for (auto kind : {BoundaryKind::SpPeriodic, BoundaryKind::BoundedNeumann}) {
        const Domain d2(kind, 2, {1, 1}, {20, 20});
        const SparseOperator op2 = assemble(random_diffusion(d2, rng));
        const ScalarField rhs = random_field(d2, rng);
        std::vector<double> w(op2.mass().begin(), op2.mass().end());
        const ScalarField x = solve_shifted(op2, 0.5, w, rhs, 1e-10);
        std::vector<double> kx(d2.size());
        op2.multiply(x.values(), kx);
        double r2 = 0.0, b2 = 0.0;
        for (std::size_t i = 0; i < d2.size(); ++i) {
            const double r = kx[i] + 0.5 * w[i] * x[i] - rhs[i];
            r2 += r * r;
            b2 += rhs[i] * rhs[i];
        }
        CHECK(std::sqrt(r2 / b2) <= 1e-10);
    }
}

TEST_CASE("CG refuses an indefinite shift instead of returning garbage") {
    // Dense eigen-decomposition gives the spectrum; shift so that the matrix
    // has a handful of negative eigenvalues.
    const Domain d(BoundaryKind::BoundedNeumann, 2, {1, 1}, {12, 12});
    std::mt19937_64 rng(9);
    const SparseOperator op = assemble(random_diffusion(d, rng));
    const auto dense = oracle::dense_principal(op, ScalarField::constant(d, 0.0));
    CHECK(std::abs(dense.lambda1) < 1e-10);  // constants span the kernel
    std::vector<double> w(op.mass().begin(), op.mass().end());
    const ScalarField rhs = random_field(d, rng);
    const double bad_shift = -3.0 * dense.gap;
    CHECK_ERROR_KIND(solve_shifted(op, bad_shift, w, rhs, 1e-10), ErrorKind::NotConverged);
    CHECK_ERROR_KIND(solve_shifted(op, -0.5, w, rhs, 1e-10), ErrorKind::NotConverged);
}

TEST_CASE("MINRES handles symmetric indefinite shifts") {
    const Domain d(BoundaryKind::SpPeriodic, 1, {1, 1}, {40, 1});
    const SparseOperator op = assemble(ScalarField::constant(d, 1.0));
    std::vector<double> w(d.size(), 1.0), rhs(d.size()), x(d.size(), 0.0), kx(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) rhs[i] = std::sin(2 * pi * d.coords(i)[0]) + 0.3;
    // shift between the first and second nonzero eigenvalues of K
    const double shift = -60.0;
    minres_solve(op, shift, w, rhs, x, 1e-10);
    op.multiply(x, kx);
    double r = 0.0, b = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        r += std::pow(kx[i] + shift * x[i] - rhs[i], 2);
        b += rhs[i] * rhs[i];
    }
    CHECK(std::sqrt(r / b) <= 1e-9);
}
