#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace harvest {

// SpPeriodic stores one period cell with no duplicated endpoint node.
// BoundedNeumann includes both endpoint nodes of every axis.
enum class BoundaryKind { SpPeriodic, BoundedNeumann };

const char* to_string(BoundaryKind kind);
BoundaryKind parse_boundary_kind(const std::string& name);

using Point = std::array<double, 2>;

class Domain {
public:
    Domain(BoundaryKind kind, int dim, std::array<double, 2> lengths, std::array<int, 2> resolution);

    BoundaryKind kind() const { return kind_; }
    int dim() const { return dim_; }
    double length(int axis) const { return lengths_[axis]; }
    int resolution(int axis) const { return resolution_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    std::size_t size() const { return size_; }

    std::size_t index(int i, int j = 0) const {
        return static_cast<std::size_t>(j) * resolution_[0] + i;
    }
    std::array<int, 2> multi_index(std::size_t index) const;
    Point coords(std::size_t index) const;
    // Wraps in the periodic case, clamps in the bounded case.
    std::size_t nearest_index(const Point& p) const;

    // Product of the grid spacings.
    double cell_volume() const;
    // Fraction of a full control volume owned by a node: 1 in the interior and
    // everywhere on a periodic grid, 1/2 on a bounded face, 1/4 on a corner.
    double node_weight(std::size_t index) const;
    std::vector<double> node_weights() const;

    bool operator==(const Domain& other) const;

private:
    BoundaryKind kind_;
    int dim_;
    std::array<double, 2> lengths_;
    std::array<int, 2> resolution_;
    std::array<double, 2> spacing_;
    std::size_t size_;
};

Domain build_domain(BoundaryKind kind, int dim, std::span<const double> lengths,
                    std::span<const int> resolution);

class ScalarField {
public:
    ScalarField(Domain domain, std::vector<double> values);
    static ScalarField constant(const Domain& domain, double value);

    const Domain& domain() const { return domain_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

private:
    Domain domain_;
    std::vector<double> values_;
};

ScalarField sample(const Domain& domain, const std::function<double(const Point&)>& spec);

struct LandscapeSpec {
    int k = 1;
    double mu_plus = 10.0;
    double mu_minus = -1.0;
    double target_fraction = 0.5;

    double radius() const;
    void validate() const;
};

bool in_landscape_disk(const LandscapeSpec& landscape, const Point& p);
ScalarField make_landscape(const Domain& domain, const LandscapeSpec& landscape);

struct FieldStats {
    double min;
    double max;
    double sup_norm;
    double l2_norm;
};

FieldStats field_stats(const ScalarField& field);

struct CoefficientSet {
    ScalarField a;
    ScalarField mu;
    ScalarField nu;
    ScalarField h;
    double nu_lo;
    double nu_hi;
    double h_lo;
    double h_hi;

    const Domain& domain() const { return a.domain(); }
};

// Validates ellipticity (min a >= tau), min nu > 0 and matching domains.
// h must be positive unless allow_zero_harvest is set.
CoefficientSet make_coefficients(ScalarField a, ScalarField mu, ScalarField nu, ScalarField h,
                                 double tau = 1e-8, bool allow_zero_harvest = false);

// Raster exports for inspection.
void write_field_csv(std::ostream& out, const ScalarField& field);
void write_field_pgm(std::ostream& out, const ScalarField& field);

// Field file: `domain <kind> <dim> <lengths...> <resolution...>` then one value per line.
void write_field_file(std::ostream& out, const ScalarField& field);
ScalarField read_field_file(std::istream& in);

std::string format_number(double value);

}  // namespace harvest
