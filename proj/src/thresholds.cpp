#include "harvest/thresholds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "harvest/errors.hpp"

namespace harvest {

ThresholdReport compute_thresholds(const CoefficientSet& coeffs, const PrincipalPair& pair, double eps) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidEps, "threshold width eps must be positive");
    ThresholdReport r{};
    r.lambda1 = pair.lambda1;
    r.phi_min = pair.phi_min;
    r.alpha = coeffs.h_lo;
    r.beta = coeffs.h_hi;
    r.nu_lo = coeffs.nu_lo;
    r.nu_hi = coeffs.nu_hi;
    r.eps = eps;
    r.persistence = pair.lambda1 < 0.0;

    const double l2 = pair.lambda1 * pair.lambda1;
    const double one_plus = 1.0 + pair.phi_min;
    r.delta1 = l2 * pair.phi_min / (r.beta * r.nu_hi * one_plus * one_plus);
    r.delta2 = l2 / (4.0 * r.alpha * r.nu_lo);
    r.kappa0 = -pair.lambda1 / (r.nu_hi * one_plus);
    r.eps0 = 2.0 * eps * r.nu_hi / pair.phi_min;
    if (!r.persistence) {
        r.delta1 = 0.0;
        r.kappa0 = 0.0;
    }
    return r;
}

double subsolution_margin(const Model& model, const PrincipalPair& pair, double delta) {
    const auto& c = model.coeffs;
    const double kappa0 = -pair.lambda1 / (c.nu_hi * (1.0 + pair.phi_min));
    std::vector<double> w(pair.phi.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = kappa0 * pair.phi[i];
    std::vector<double> r(w.size());
    harvested_residual(model, delta, w, r);
    return *std::min_element(r.begin(), r.end());
}

bool verify_subsolution(const Model& model, const PrincipalPair& pair, double delta) {
    const double tol_sub = 1e-6 * field_stats(model.coeffs.mu).sup_norm * sup_norm(pair.phi.values());
    return subsolution_margin(model, pair, delta) >= -tol_sub;
}

namespace {

SweepRow sweep_row(int k, const SweepOptions& o) {
    SweepRow row;
    row.k = k;
    try {
        const Domain d(BoundaryKind::SpPeriodic, 2, {1.0, 1.0}, {o.resolution, o.resolution});
        LandscapeSpec land{k, o.mu_plus, o.mu_minus, o.target_fraction};
        Model model = make_model(make_coefficients(ScalarField::constant(d, o.a), make_landscape(d, land),
                                                   ScalarField::constant(d, o.nu), ScalarField::constant(d, o.h)));
        const PrincipalPair pair = principal_eigenpair(model.op, model.coeffs.mu, o.eigen_tol);
        const ThresholdReport t = compute_thresholds(model.coeffs, pair, o.eps);
        row.lambda1 = t.lambda1;
        row.phi_min = t.phi_min;
        row.delta1 = t.delta1;
        row.delta2 = t.delta2;
        if (o.compute_delta_star && t.persistence) {
            const FoldReport fold = trace_branches(model, o.continuation);
            if (fold.u_at_fold) {
                row.delta_star = fold.delta_star;
            } else {
                row.error = fold.message;
            }
        }
    } catch (const Error& e) {
        row.error = e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> fragmentation_sweep(const std::vector<int>& k_list, const SweepOptions& options) {
    if (k_list.empty()) throw Error(ErrorKind::ConfigError, "k_list must not be empty");
    std::vector<int> ks = k_list;
    std::sort(ks.begin(), ks.end());
    std::vector<SweepRow> rows(ks.size());

    unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(ks.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < ks.size(); i = next++) rows[i] = sweep_row(ks[i], options);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "k,lambda1,phi_min,delta1,delta2,delta_star\n";
    for (const auto& r : rows) {
        out << r.k << ',' << format_number(r.lambda1) << ',' << format_number(r.phi_min) << ','
            << format_number(r.delta1) << ',' << format_number(r.delta2) << ','
            << (r.delta_star ? format_number(*r.delta_star) : std::string("nan")) << '\n';
    }
}

void write_thresholds_csv(std::ostream& out, const ThresholdReport& r) {
    out << "lambda1,phi_min,alpha,beta,nu_lo,nu_hi,delta1,delta2,kappa0,eps,eps0\n"
        << format_number(r.lambda1) << ',' << format_number(r.phi_min) << ',' << format_number(r.alpha) << ','
        << format_number(r.beta) << ',' << format_number(r.nu_lo) << ',' << format_number(r.nu_hi) << ','
        << format_number(r.delta1) << ',' << format_number(r.delta2) << ',' << format_number(r.kappa0) << ','
        << format_number(r.eps) << ',' << format_number(r.eps0) << '\n';
}

}  // namespace harvest
