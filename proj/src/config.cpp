#include "harvest/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "harvest/eigen.hpp"
#include "harvest/errors.hpp"
#include "harvest/thresholds.hpp"

namespace harvest {

using json = nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::ConfigError, "`" + path + "`: " + what);
}

template <typename T>
void read(const json& node, const char* key, const std::string& prefix, T& target) {
    if (!node.contains(key)) return;
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    try {
        target = node.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(path, "has the wrong type");
    }
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    if (!root.at(key).is_object()) config_error(key, "must be an object");
    return root.at(key);
}

FieldExpr parse_field(const json& node, const std::string& path, FieldExpr fallback) {
    if (node.is_number()) {
        fallback.type = "constant";
        fallback.value = node.get<double>();
        return fallback;
    }
    if (!node.is_object()) config_error(path, "must be a number or an object");
    FieldExpr e = fallback;
    read(node, "type", path, e.type);
    read(node, "value", path, e.value);
    read(node, "mean", path, e.mean);
    read(node, "amplitude", path, e.amplitude);
    read(node, "wavenumber", path, e.wavenumber);
    read(node, "k", path, e.landscape.k);
    read(node, "mu_plus", path, e.landscape.mu_plus);
    read(node, "mu_minus", path, e.landscape.mu_minus);
    read(node, "fraction", path, e.landscape.target_fraction);
    read(node, "path", path, e.path);
    if (e.type != "constant" && e.type != "cosine" && e.type != "landscape" && e.type != "file") {
        config_error(path + ".type", "unknown coefficient type '" + e.type + "'");
    }
    return e;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorKind::ConfigError, "config root must be an object");

    RunConfig c;
    c.base_dir = base_dir;
    c.source_text = text;

    const json& dom = section(root, "domain");
    std::string kind = to_string(c.kind);
    read(dom, "kind", "domain", kind);
    try {
        c.kind = parse_boundary_kind(kind);
    } catch (const Error&) {
        config_error("domain.kind", "must be 'sp-periodic' or 'bounded'");
    }
    read(dom, "dim", "domain", c.dim);
    if (dom.contains("dim") && !dom.contains("lengths")) c.lengths.assign(c.dim, 1.0);
    if (dom.contains("dim") && !dom.contains("resolution")) c.resolution.assign(c.dim, 64);
    read(dom, "lengths", "domain", c.lengths);
    read(dom, "resolution", "domain", c.resolution);

    const json& coef = section(root, "coefficients");
    c.a.value = 1.0;
    c.mu.value = 1.0;
    c.nu.value = 1.0;
    c.h.value = 1.0;
    if (coef.contains("a")) c.a = parse_field(coef.at("a"), "coefficients.a", c.a);
    if (coef.contains("mu")) c.mu = parse_field(coef.at("mu"), "coefficients.mu", c.mu);
    if (coef.contains("nu")) c.nu = parse_field(coef.at("nu"), "coefficients.nu", c.nu);
    if (coef.contains("h")) c.h = parse_field(coef.at("h"), "coefficients.h", c.h);

    const json& s = section(root, "solver");
    read(s, "eigen_tol", "solver", c.solver.eigen_tol);
    read(s, "newton_tol", "solver", c.solver.newton_tol);
    read(s, "cg_tol", "solver", c.solver.cg_tol);
    read(s, "dt", "solver", c.solver.dt);
    read(s, "t_max", "solver", c.solver.t_max);
    read(s, "tol_steady", "solver", c.solver.tol_steady);
    read(s, "tol_rate", "solver", c.solver.tol_rate);
    read(s, "orbit_tol", "solver", c.solver.orbit_tol);
    read(s, "orbit_max_iterations", "solver", c.solver.orbit_max_iterations);
    read(s, "steps_per_period", "solver", c.solver.steps_per_period);
    read(s, "max_steps", "solver", c.solver.max_steps);
    read(s, "delta_max", "solver", c.solver.delta_max);
    read(s, "tau", "solver", c.solver.tau);

    const json& x = section(root, "experiment");
    read(x, "delta", "experiment", c.experiment.delta);
    read(x, "eps", "experiment", c.experiment.eps);
    read(x, "omega", "experiment", c.experiment.omega);
    read(x, "k_list", "experiment", c.experiment.k_list);
    read(x, "omega_list", "experiment", c.experiment.omega_list);
    read(x, "compute_delta_star", "experiment", c.experiment.compute_delta_star);
    read(x, "compute_stability", "experiment", c.experiment.compute_stability);
    read(x, "sweep_resolution", "experiment", c.experiment.sweep_resolution);
    read(x, "mu_plus", "experiment", c.experiment.mu_plus);
    read(x, "mu_minus", "experiment", c.experiment.mu_minus);
    read(x, "fraction", "experiment", c.experiment.target_fraction);
    if (x.contains("forcing")) {
        const json& f = x.at("forcing");
        if (!f.is_object()) config_error("experiment.forcing", "must be an object");
        read(f, "type", "experiment.forcing", c.experiment.forcing.type);
        read(f, "amplitude", "experiment.forcing", c.experiment.forcing.amplitude);
        read(f, "phase", "experiment.forcing", c.experiment.forcing.phase);
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

Domain make_domain(const RunConfig& c) {
    try {
        return build_domain(c.kind, c.dim, c.lengths, c.resolution);
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, std::string("`domain`: ") + e.what());
    }
}

ScalarField make_field(const RunConfig& c, const Domain& d, const FieldExpr& e, const std::string& name) {
    const std::string path = "coefficients." + name;
    try {
        if (e.type == "constant") return ScalarField::constant(d, e.value);
        if (e.type == "cosine") {
            const double l = d.length(0);
            return sample(d, [&](const Point& p) {
                return e.mean + e.amplitude * std::cos(2.0 * std::numbers::pi * e.wavenumber * p[0] / l);
            });
        }
        if (e.type == "landscape") return make_landscape(d, e.landscape);
        if (e.type == "file") {
            std::ifstream in(c.base_dir / e.path);
            if (!in) config_error(path + ".path", "cannot open field file '" + e.path + "'");
            ScalarField f = read_field_file(in);
            if (!(f.domain() == d)) config_error(path + ".path", "field file domain differs from `domain`");
            return f;
        }
    } catch (const Error& err) {
        if (err.kind() == ErrorKind::ConfigError) throw;
        config_error(path, err.what());
    }
    config_error(path + ".type", "unknown coefficient type '" + e.type + "'");
}

Model make_model(const RunConfig& c) {
    const Domain d = make_domain(c);
    ScalarField a = make_field(c, d, c.a, "a");
    ScalarField mu = make_field(c, d, c.mu, "mu");
    ScalarField nu = make_field(c, d, c.nu, "nu");
    ScalarField h = make_field(c, d, c.h, "h");
    try {
        return make_model(make_coefficients(std::move(a), std::move(mu), std::move(nu), std::move(h), c.solver.tau));
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, std::string("`coefficients`: ") + e.what());
    }
}

ForcingSpec make_forcing(const RunConfig& c, const Model& model, double omega) {
    const ForcingConfig f = c.experiment.forcing;
    const Domain d = model.domain();
    const std::vector<double> h(model.coeffs.h.values().begin(), model.coeffs.h.values().end());
    ForcingSpec spec;
    spec.delta = c.experiment.delta;
    spec.omega = omega;
    const double amp = f.type == "constant" ? 0.0 : f.amplitude;
    spec.g = [d, h, amp, phase = f.phase](double s, const Point& x) {
        return h[d.nearest_index(x)] * (1.0 + amp * std::sin(2.0 * std::numbers::pi * s + phase));
    };
    return spec;
}

std::vector<std::string> validate(const RunConfig& c, const std::string& experiment) {
    std::vector<std::string> diag;
    auto positive = [&](double v, const char* path) {
        if (!(v > 0.0)) diag.push_back(std::string("`") + path + "` must be positive");
    };
    bool known = false;
    for (const auto& n : experiment_names()) known = known || n == experiment;
    if (!known) diag.push_back("unknown experiment '" + experiment + "'");

    positive(c.solver.eigen_tol, "solver.eigen_tol");
    positive(c.solver.newton_tol, "solver.newton_tol");
    positive(c.solver.cg_tol, "solver.cg_tol");
    positive(c.solver.dt, "solver.dt");
    positive(c.solver.t_max, "solver.t_max");
    positive(c.solver.tol_steady, "solver.tol_steady");
    positive(c.solver.tol_rate, "solver.tol_rate");
    positive(c.solver.orbit_tol, "solver.orbit_tol");
    positive(c.solver.delta_max, "solver.delta_max");
    positive(c.solver.tau, "solver.tau");
    if (c.solver.max_steps < 1) diag.push_back("`solver.max_steps` must be >= 1");
    if (c.solver.orbit_max_iterations < 1) diag.push_back("`solver.orbit_max_iterations` must be >= 1");
    if (c.solver.steps_per_period < 32) {
        diag.push_back("`solver.steps_per_period` must be >= 32 to resolve the forcing period");
    }
    positive(c.experiment.eps, "experiment.eps");
    if (c.experiment.delta < 0.0) diag.push_back("`experiment.delta` must be nonnegative");

    std::optional<Model> model;
    try {
        model = make_model(c);
    } catch (const Error& e) {
        diag.push_back(e.what());
    }

    if (experiment == "periodic" || experiment == "sweep-omega") {
        if (c.kind != BoundaryKind::BoundedNeumann) {
            diag.push_back("`domain.kind`: time-periodic forcing is restricted to the bounded (Neumann) case");
        }
        if (c.experiment.forcing.type != "sine" && c.experiment.forcing.type != "constant") {
            diag.push_back("`experiment.forcing.type` must be 'sine' or 'constant'");
        }
        if (c.experiment.forcing.type == "sine" && !(std::abs(c.experiment.forcing.amplitude) < 1.0 + 1e-12)) {
            diag.push_back("`experiment.forcing.amplitude` must not exceed 1 (forcing must stay nonnegative)");
        }
        if (!(c.experiment.delta > 0.0)) diag.push_back("`experiment.delta` must be positive for periodic forcing");
        if (experiment == "periodic") positive(c.experiment.omega, "experiment.omega");
        if (experiment == "sweep-omega") {
            if (c.experiment.omega_list.empty()) diag.push_back("`experiment.omega_list` must not be empty");
            for (double w : c.experiment.omega_list) {
                if (!(w > 0.0)) diag.push_back("`experiment.omega_list` entries must be positive");
            }
        }
    }
    if (experiment == "sweep-fragmentation") {
        if (c.experiment.k_list.empty()) diag.push_back("`experiment.k_list` must not be empty");
        for (int k : c.experiment.k_list) {
            if (k < 1) diag.push_back("`experiment.k_list` entries must be >= 1");
        }
        if (c.experiment.sweep_resolution < 4) diag.push_back("`experiment.sweep_resolution` must be >= 4");
    }
    if (experiment == "evolve" && model && diag.empty()) {
        try {
            const PrincipalPair pair = principal_eigenpair(model->op, model->coeffs.mu, c.solver.eigen_tol);
            const ThresholdReport t = compute_thresholds(model->coeffs, pair, c.experiment.eps);
            if (!t.persistence) {
                diag.push_back("evolve requires lambda1 < 0 (got " + format_number(t.lambda1) + ")");
            } else if (!(t.eps0 < -t.lambda1 / 2.0)) {
                diag.push_back("`experiment.eps`: collapse level eps0 = 2 eps nu_hi / phi_min = " +
                               format_number(t.eps0) + " must be below -lambda1/2 = " +
                               format_number(-t.lambda1 / 2.0));
            }
        } catch (const Error& e) {
            diag.push_back(std::string("eigensolver failed during validation: ") + e.what());
        }
    }
    return diag;
}

}  // namespace harvest
