#include "harvest/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "harvest/errors.hpp"

namespace harvest {

SparseOperator::SparseOperator(Domain domain, std::vector<std::size_t> row_offsets,
                               std::vector<std::size_t> col_indices, std::vector<double> entries)
    : domain_(std::move(domain)),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      entries_(std::move(entries)),
      mass_(domain_.node_weights()),
      diagonal_(domain_.size(), 0.0) {
    if (row_offsets_.size() != domain_.size() + 1 || col_indices_.size() != entries_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "inconsistent CSR storage");
    }
    for (std::size_t i = 0; i < n(); ++i) {
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (col_indices_[k] == i) diagonal_[i] += entries_[k];
        }
    }
}

double SparseOperator::entry(std::size_t i, std::size_t j) const {
    double v = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (col_indices_[k] == j) v += entries_[k];
    }
    return v;
}

void SparseOperator::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t rows = n();
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            s += entries_[k] * x[col_indices_[k]];
        }
        y[i] = s;
    }
}

SparseOperator assemble(const ScalarField& a) {
    const Domain& d = a.domain();
    const std::size_t n = d.size();
    const bool periodic = d.kind() == BoundaryKind::SpPeriodic;

    // Row-wise accumulation; each row has at most 2*dim+1 distinct columns.
    std::vector<std::map<std::size_t, double>> rows(n);
    auto add_face = [&](std::size_t p, std::size_t q, double coeff) {
        rows[p][p] += coeff;
        rows[q][q] += coeff;
        rows[p][q] -= coeff;
        rows[q][p] -= coeff;
    };

    for (int axis = 0; axis < d.dim(); ++axis) {
        const double h = d.spacing(axis);
        const int na = d.resolution(axis);
        const int faces = periodic ? na : na - 1;
        for (std::size_t node = 0; node < n; ++node) {
            auto ij = d.multi_index(node);
            if (ij[axis] >= faces) continue;
            auto nb = ij;
            nb[axis] = (ij[axis] + 1) % na;
            const std::size_t other = d.index(nb[0], nb[1]);
            // Faces running along a bounded boundary carry half the area.
            double fraction = 1.0;
            if (!periodic && d.dim() == 2) {
                const int t = 1 - axis;
                if (ij[t] == 0 || ij[t] == d.resolution(t) - 1) fraction = 0.5;
            }
            const double a_face = 0.5 * (a[node] + a[other]);
            add_face(node, other, fraction * a_face / (h * h));
        }
    }

    std::vector<std::size_t> offsets(n + 1, 0);
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    cols.reserve(n * (2 * d.dim() + 1));
    vals.reserve(n * (2 * d.dim() + 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, v] : rows[i]) {
            cols.push_back(j);
            vals.push_back(v);
        }
        offsets[i + 1] = cols.size();
    }
    return SparseOperator(d, std::move(offsets), std::move(cols), std::move(vals));
}

ScalarField apply(const SparseOperator& op, const ScalarField& field) {
    if (!(field.domain() == op.domain())) {
        throw Error(ErrorKind::DimensionMismatch, "field and operator live on different domains");
    }
    std::vector<double> y(op.n());
    op.multiply(field.values(), y);
    const auto m = op.mass();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] /= m[i];
    return ScalarField(op.domain(), std::move(y));
}

double weighted_dot(std::span<const double> mass, std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += mass[i] * x[i] * y[i];
    return s;
}

double weighted_norm(std::span<const double> mass, std::span<const double> x) {
    return std::sqrt(weighted_dot(mass, x, x));
}

double sup_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void check_sizes(const SparseOperator& op, std::span<const double> weights, std::span<const double> rhs,
                 std::span<double> x) {
    if (weights.size() != op.n() || rhs.size() != op.n() || x.size() != op.n()) {
        throw Error(ErrorKind::DimensionMismatch, "linear system dimensions do not match operator");
    }
}

struct ShiftedSystem {
    const SparseOperator& op;
    double shift;
    std::span<const double> weights;

    void apply(std::span<const double> x, std::span<double> y) const {
        op.multiply(x, y);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += shift * weights[i] * x[i];
    }

    double diag(std::size_t i) const { return op.diagonal()[i] + shift * weights[i]; }

    double relative_residual(std::span<const double> rhs, std::span<const double> x, std::span<double> r,
                             double bnorm) const {
        apply(x, r);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
        return std::sqrt(dot(r, r)) / bnorm;
    }
};

int default_iterations(std::size_t n, int requested) {
    return requested > 0 ? requested : static_cast<int>(std::max<std::size_t>(200, 20 * n));
}

}  // namespace

SolveStats cg_solve(const SparseOperator& op, double shift, std::span<const double> weights,
                    std::span<const double> rhs, std::span<double> x, double tol, int max_iterations) {
    check_sizes(op, weights, rhs, x);
    const std::size_t n = op.n();
    const ShiftedSystem sys{op, shift, weights};
    const int max_it = default_iterations(n, max_iterations);

    const double bnorm = std::sqrt(dot(rhs, rhs));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {};
    }

    std::vector<double> inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = sys.diag(i);
        if (!(d > 0.0)) throw Error(ErrorKind::NotConverged, "CG: non-positive diagonal, system is not positive definite");
        inv_diag[i] = 1.0 / d;
    }

    std::vector<double> r(n), z(n), p(n), ap(n);
    SolveStats stats;
    double rel = sys.relative_residual(rhs, x, r, bnorm);
    // A restart recomputes the true residual; the recurrence can drift from it.
    for (int restart = 0; restart < 4 && rel > tol && stats.iterations < max_it; ++restart) {
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = dot(r, z);
        while (stats.iterations < max_it) {
            sys.apply(p, ap);
            const double pap = dot(p, ap);
            if (!(pap > 0.0)) {
                throw Error(ErrorKind::NotConverged, "CG: non-positive curvature, system is not positive definite");
            }
            const double alpha = rz / pap;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            ++stats.iterations;
            if (std::sqrt(dot(r, r)) / bnorm <= 0.5 * tol) break;
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        rel = sys.relative_residual(rhs, x, r, bnorm);
    }
    stats.relative_residual = rel;
    if (!(rel <= tol)) {
        throw Error(ErrorKind::NotConverged, "CG: relative residual " + format_number(rel) + " after " +
                                                 std::to_string(stats.iterations) + " iterations");
    }
    return stats;
}

SolveStats minres_solve(const SparseOperator& op, double shift, std::span<const double> weights,
                        std::span<const double> rhs, std::span<double> x, double tol, int max_iterations) {
    check_sizes(op, weights, rhs, x);
    const std::size_t n = op.n();
    const ShiftedSystem sys{op, shift, weights};
    const int max_it = default_iterations(n, max_iterations);

    const double bnorm = std::sqrt(dot(rhs, rhs));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {};
    }

    std::vector<double> inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(sys.diag(i));
        inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }

    std::vector<double> r1(n), r2(n), y(n), v(n), w(n), w1(n), w2(n), tmp(n);
    SolveStats stats;
    double rel = sys.relative_residual(rhs, x, r1, bnorm);
    for (int restart = 0; restart < 4 && rel > tol && stats.iterations < max_it; ++restart) {
        // Preconditioned Lanczos with Givens-rotation QR of the tridiagonal.
        for (std::size_t i = 0; i < n; ++i) y[i] = inv_diag[i] * r1[i];
        const double beta1 = std::sqrt(dot(r1, y));
        r2 = r1;
        double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
        double cs = -1.0, sn = 0.0;
        std::fill(w.begin(), w.end(), 0.0);
        std::fill(w2.begin(), w2.end(), 0.0);
        int local = 0;
        while (stats.iterations < max_it) {
            const double s = 1.0 / beta;
            for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
            sys.apply(v, y);
            if (local > 0) {
                const double f = beta / oldb;
                for (std::size_t i = 0; i < n; ++i) y[i] -= f * r1[i];
            }
            const double alfa = dot(v, y);
            const double f = alfa / beta;
            for (std::size_t i = 0; i < n; ++i) y[i] -= f * r2[i];
            std::swap(r1, r2);
            r2 = y;
            for (std::size_t i = 0; i < n; ++i) y[i] = inv_diag[i] * r2[i];
            oldb = beta;
            const double bb = dot(r2, y);
            beta = std::sqrt(std::max(bb, 0.0));

            const double oldeps = epsln;
            const double delta = cs * dbar + sn * alfa;
            const double gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
            cs = gbar / gamma;
            sn = beta / gamma;
            const double phi = cs * phibar;
            phibar = sn * phibar;

            std::swap(w1, w2);
            std::swap(w2, w);
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
                x[i] += phi * w[i];
            }
            ++stats.iterations;
            ++local;
            if (phibar <= 0.25 * tol * beta1 || beta == 0.0) break;
        }
        rel = sys.relative_residual(rhs, x, r1, bnorm);
    }
    stats.relative_residual = rel;
    if (!(rel <= tol)) {
        throw Error(ErrorKind::NotConverged, "MINRES: relative residual " + format_number(rel) + " after " +
                                                 std::to_string(stats.iterations) + " iterations");
    }
    return stats;
}

ScalarField solve_shifted(const SparseOperator& op, double shift, std::span<const double> weights,
                          const ScalarField& rhs, double tol) {
    if (!(rhs.domain() == op.domain())) {
        throw Error(ErrorKind::DimensionMismatch, "right-hand side and operator live on different domains");
    }
    std::vector<double> y(op.n(), 0.0);
    cg_solve(op, shift, weights, rhs.values(), y, tol);
    return ScalarField(op.domain(), std::move(y));
}

}  // namespace harvest
