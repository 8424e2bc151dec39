#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "check_error.hpp"
#include "harvest/config.hpp"
#include "harvest/experiments.hpp"

using namespace harvest;
namespace fs = std::filesystem;

namespace {

const char* kHomogeneous = R"({
  "domain": {"kind": "sp-periodic", "dim": 2, "lengths": [1, 1], "resolution": [16, 16]},
  "coefficients": {"a": 1, "mu": 1, "nu": 1, "h": 1},
  "experiment": {"delta": 0.1875, "eps": 0.01}
})";

const char* kBounded = R"({
  "domain": {"kind": "bounded", "dim": 1, "lengths": [1], "resolution": [17]},
  "coefficients": {"mu": {"type": "cosine", "mean": 1, "amplitude": 0.3, "wavenumber": 0.5}},
  "experiment": {"delta": 0.15, "omega": 8, "omega_list": [4, 8]}
})";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("harvest_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct CliResult {
    int status;
    std::string out, err;
};

CliResult run_config(const RunConfig& c, const std::string& experiment, const fs::path& dir) {
    std::ostringstream out, err;
    RunContext ctx;
    ctx.out_dir = dir;
    const int status = run(c, experiment, ctx, out, err);
    return {status, out.str(), err.str()};
}

}  // namespace

TEST_CASE("thresholds summary line for the homogeneous medium") {
    const fs::path dir = scratch("thresholds");
    const CliResult o = run_config(parse_config(kHomogeneous), "thresholds", dir);
    CHECK(o.status == 0);
    CHECK(o.out.find("delta1=0.2500 delta2=0.2500") != std::string::npos);
    CHECK(fs::exists(dir / "thresholds.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "thresholds.manifest.json"));
    CHECK(manifest.at("experiment") == "thresholds");
    CHECK(manifest.at("version") == kVersion);
    CHECK(manifest.at("config").at("domain").at("kind") == "sp-periodic");
    CHECK(manifest.at("summary").at("delta1").get<double>() == doctest::Approx(0.25));
}

TEST_CASE("config errors name the offending field") {
    try {
        parse_config(R"({"solver": {"eigen_tol": "tight"}})");
        FAIL("expected a ConfigError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConfigError);
        CHECK(std::string(e.what()).find("`solver.eigen_tol`") != std::string::npos);
    }
    CHECK_ERROR_KIND(parse_config("{not json"), ErrorKind::ConfigError);
    CHECK_ERROR_KIND(parse_config(R"({"domain": {"kind": "torus"}})"), ErrorKind::ConfigError);
    CHECK_ERROR_KIND(parse_config(R"({"coefficients": {"mu": {"type": "spline"}}})"), ErrorKind::ConfigError);

    const RunConfig c = parse_config(R"({"solver": {"eigen_tol": -1e-9}})");
    const CliResult o = run_config(c, "eigen", scratch("negtol"));
    CHECK(o.status == 1);
    CHECK(o.err.find("`solver.eigen_tol`") != std::string::npos);
    CHECK(o.err.find("ConfigError") != std::string::npos);
}

TEST_CASE("validate") {
    CHECK(validate(parse_config(kHomogeneous), "thresholds").empty());
    CHECK(validate(parse_config(kBounded), "periodic").empty());

    const auto periodic = validate(parse_config(kHomogeneous), "periodic");
    REQUIRE(periodic.size() == 1);
    CHECK(periodic[0].find("bounded (Neumann) case") != std::string::npos);

    // eps0 = 2 eps / phi_min = 2 must stay below -lambda1 / 2 = 0.5
    const RunConfig wide = parse_config(R"({"coefficients": {"mu": 1}, "experiment": {"eps": 1.0}})");
    const auto evolve = validate(wide, "evolve");
    REQUIRE(evolve.size() == 1);
    CHECK(evolve[0].find("-lambda1/2") != std::string::npos);

    CHECK_FALSE(validate(parse_config(kHomogeneous), "dance").empty());
}

TEST_CASE("solver failures exit with status 2") {
    const RunConfig hostile = parse_config(R"({"domain": {"resolution": [8, 8]}, "coefficients": {"mu": -1}})");
    const CliResult o = run_config(hostile, "steady", scratch("hostile"));
    CHECK(o.status == 2);
    CHECK(o.err.find("NoPositiveState") != std::string::npos);
    CHECK(exit_status(ErrorKind::ConfigError) == 1);
    CHECK(exit_status(ErrorKind::NotConverged) == 2);
}

TEST_CASE("coefficient expressions") {
    const fs::path dir = scratch("fields");
    const RunConfig base = parse_config(kHomogeneous, dir);
    const Domain d = make_domain(base);
    const ScalarField mu = sample(d, [](const Point& x) { return 1 + 0.25 * x[0] * x[1]; });
    {
        std::ofstream f(dir / "mu.field");
        write_field_file(f, mu);
    }
    const RunConfig c = parse_config(R"({
      "domain": {"kind": "sp-periodic", "dim": 2, "lengths": [1, 1], "resolution": [16, 16]},
      "coefficients": {"mu": {"type": "file", "path": "mu.field"},
                       "a": {"type": "cosine", "mean": 2, "amplitude": 0.5, "wavenumber": 1},
                       "nu": {"type": "landscape", "k": 2, "mu_plus": 2, "mu_minus": 1, "fraction": 0.4}}
    })", dir);
    const Model m = make_model(c);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(m.coeffs.mu[i] == mu[i]);
    CHECK(m.coeffs.a[d.index(0, 3)] == doctest::Approx(2.5));
    CHECK(m.coeffs.nu_lo == 1.0);
    CHECK(m.coeffs.nu_hi == 2.0);

    const RunConfig missing = parse_config(R"({"coefficients": {"mu": {"type": "file", "path": "nope.field"}}})", dir);
    CHECK_ERROR_KIND(make_model(missing), ErrorKind::ConfigError);
}

TEST_CASE("experiments write the documented files deterministically") {
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
        {"eigen", {"eigen.csv", "phi.csv"}},
        {"steady", {"steady.csv"}},
        {"branches", {"branch.csv", "fold.csv"}},
        {"evolve", {"trajectory.csv", "final.csv"}},
    };
    for (const auto& [experiment, files] : cases) {
        const fs::path a = scratch(experiment + "_a"), b = scratch(experiment + "_b");
        const RunConfig c = parse_config(kHomogeneous);
        REQUIRE(run_config(c, experiment, a).status == 0);
        REQUIRE(run_config(c, experiment, b).status == 0);
        for (const auto& f : files) {
            INFO(experiment, "/", f);
            REQUIRE(fs::exists(a / f));
            CHECK(slurp(a / f) == slurp(b / f));
        }
        CHECK(fs::exists(a / (experiment + ".manifest.json")));
    }
    for (const std::string experiment : {"periodic", "sweep-omega"}) {
        const fs::path a = scratch(experiment + "_a"), b = scratch(experiment + "_b");
        const RunConfig c = parse_config(kBounded);
        REQUIRE(run_config(c, experiment, a).status == 0);
        REQUIRE(run_config(c, experiment, b).status == 0);
        const std::string file = experiment == "periodic" ? "orbit.csv" : "omega_sweep.csv";
        CHECK(slurp(a / file) == slurp(b / file));
    }
}

TEST_CASE("fragmentation sweep CSV has one sorted row per k") {
    const fs::path dir = scratch("fragmentation");
    const RunConfig c =
        parse_config(R"({"experiment": {"k_list": [6, 2, 4, 1, 5, 3], "sweep_resolution": 24}})");
    const CliResult o = run_config(c, "sweep-fragmentation", dir);
    REQUIRE(o.status == 0);
    std::istringstream csv(slurp(dir / "fragmentation.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "k,lambda1,phi_min,delta1,delta2,delta_star");
    int expected = 1, rows = 0;
    while (std::getline(csv, line)) {
        CHECK(std::stoi(line.substr(0, line.find(','))) == expected++);
        ++rows;
    }
    CHECK(rows == 6);
}
