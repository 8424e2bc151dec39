#include "harvest/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "harvest/errors.hpp"

namespace harvest {

const char* to_string(BoundaryKind kind) {
    return kind == BoundaryKind::SpPeriodic ? "sp-periodic" : "bounded";
}

BoundaryKind parse_boundary_kind(const std::string& name) {
    if (name == "sp-periodic" || name == "periodic") return BoundaryKind::SpPeriodic;
    if (name == "bounded" || name == "neumann") return BoundaryKind::BoundedNeumann;
    throw Error(ErrorKind::InvalidDomain, "unknown domain kind '" + name + "'");
}

Domain::Domain(BoundaryKind kind, int dim, std::array<double, 2> lengths,
               std::array<int, 2> resolution)
    : kind_(kind), dim_(dim), lengths_{1.0, 1.0}, resolution_{1, 1}, spacing_{1.0, 1.0}, size_(1) {
    if (dim != 1 && dim != 2) {
        throw Error(ErrorKind::InvalidDomain, "dim must be 1 or 2, got " + std::to_string(dim));
    }
    for (int axis = 0; axis < dim; ++axis) {
        if (!(lengths[axis] > 0.0) || !std::isfinite(lengths[axis])) {
            throw Error(ErrorKind::InvalidDomain,
                        "length on axis " + std::to_string(axis) + " must be positive");
        }
        if (resolution[axis] < 4) {
            throw Error(ErrorKind::InvalidDomain,
                        "resolution on axis " + std::to_string(axis) + " must be >= 4, got " +
                            std::to_string(resolution[axis]));
        }
        lengths_[axis] = lengths[axis];
        resolution_[axis] = resolution[axis];
        const int intervals = kind == BoundaryKind::SpPeriodic ? resolution[axis] : resolution[axis] - 1;
        spacing_[axis] = lengths[axis] / intervals;
        size_ *= static_cast<std::size_t>(resolution[axis]);
    }
}

std::array<int, 2> Domain::multi_index(std::size_t index) const {
    const int n0 = resolution_[0];
    return {static_cast<int>(index % n0), static_cast<int>(index / n0)};
}

Point Domain::coords(std::size_t index) const {
    const auto [i, j] = multi_index(index);
    Point p{i * spacing_[0], 0.0};
    if (dim_ == 2) p[1] = j * spacing_[1];
    return p;
}

std::size_t Domain::nearest_index(const Point& p) const {
    std::array<int, 2> ij{0, 0};
    for (int axis = 0; axis < dim_; ++axis) {
        const long k = std::lround(p[axis] / spacing_[axis]);
        const int n = resolution_[axis];
        if (kind_ == BoundaryKind::SpPeriodic) {
            ij[axis] = static_cast<int>(((k % n) + n) % n);
        } else {
            ij[axis] = static_cast<int>(std::clamp<long>(k, 0, n - 1));
        }
    }
    return index(ij[0], ij[1]);
}

double Domain::cell_volume() const {
    double v = 1.0;
    for (int axis = 0; axis < dim_; ++axis) v *= spacing_[axis];
    return v;
}

double Domain::node_weight(std::size_t index) const {
    if (kind_ == BoundaryKind::SpPeriodic) return 1.0;
    const auto ij = multi_index(index);
    double w = 1.0;
    for (int axis = 0; axis < dim_; ++axis) {
        if (ij[axis] == 0 || ij[axis] == resolution_[axis] - 1) w *= 0.5;
    }
    return w;
}

std::vector<double> Domain::node_weights() const {
    std::vector<double> w(size_);
    for (std::size_t i = 0; i < size_; ++i) w[i] = node_weight(i);
    return w;
}

bool Domain::operator==(const Domain& other) const {
    return kind_ == other.kind_ && dim_ == other.dim_ && lengths_ == other.lengths_ &&
           resolution_ == other.resolution_;
}

Domain build_domain(BoundaryKind kind, int dim, std::span<const double> lengths,
                    std::span<const int> resolution) {
    if (dim != 1 && dim != 2) {
        throw Error(ErrorKind::InvalidDomain, "dim must be 1 or 2, got " + std::to_string(dim));
    }
    if (lengths.size() != static_cast<std::size_t>(dim) ||
        resolution.size() != static_cast<std::size_t>(dim)) {
        throw Error(ErrorKind::InvalidDomain, "lengths and resolution must have one entry per axis");
    }
    std::array<double, 2> l{1.0, 1.0};
    std::array<int, 2> n{1, 1};
    for (int axis = 0; axis < dim; ++axis) {
        l[axis] = lengths[axis];
        n[axis] = resolution[axis];
    }
    return Domain(kind, dim, l, n);
}

ScalarField::ScalarField(Domain domain, std::vector<double> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
    if (values_.size() != domain_.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "field has " + std::to_string(values_.size()) + " values, domain has " +
                        std::to_string(domain_.size()) + " nodes");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "field contains a non-finite value");
    }
}

ScalarField ScalarField::constant(const Domain& domain, double value) {
    return ScalarField(domain, std::vector<double>(domain.size(), value));
}

ScalarField sample(const Domain& domain, const std::function<double(const Point&)>& spec) {
    std::vector<double> values(domain.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = spec(domain.coords(i));
        if (!std::isfinite(values[i])) {
            throw Error(ErrorKind::NonFiniteValue, "specification is not finite at node " + std::to_string(i));
        }
    }
    return ScalarField(domain, std::move(values));
}

double LandscapeSpec::radius() const {
    return std::sqrt(target_fraction / (static_cast<double>(k) * k * std::numbers::pi));
}

void LandscapeSpec::validate() const {
    if (k < 1) throw Error(ErrorKind::InvalidDomain, "landscape k must be >= 1");
    if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidDomain, "landscape target_fraction must lie in (0,1)");
    }
    if (!(2.0 * radius() < 1.0 / k)) {
        throw Error(ErrorKind::InvalidDomain, "landscape disks overlap (2r >= 1/k)");
    }
}

bool in_landscape_disk(const LandscapeSpec& landscape, const Point& p) {
    // Disks sit at the centres of the k x k sub-cells of the unit cell, so the
    // nearest centre is found by flooring into the sub-cell.
    const double k = landscape.k;
    const double r = landscape.radius();
    double d2 = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
        const double x = p[axis] - std::floor(p[axis]);
        const double c = (std::floor(x * k) + 0.5) / k;
        d2 += (x - c) * (x - c);
    }
    return d2 <= r * r;
}

ScalarField make_landscape(const Domain& domain, const LandscapeSpec& landscape) {
    if (domain.dim() != 2) throw Error(ErrorKind::InvalidDomain, "landscape requires a 2-D domain");
    landscape.validate();
    return sample(domain, [&](const Point& p) {
        return in_landscape_disk(landscape, p) ? landscape.mu_plus : landscape.mu_minus;
    });
}

FieldStats field_stats(const ScalarField& field) {
    const auto v = field.values();
    const Domain& d = field.domain();
    FieldStats s{v[0], v[0], 0.0, 0.0};
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s.min = std::min(s.min, v[i]);
        s.max = std::max(s.max, v[i]);
        s.sup_norm = std::max(s.sup_norm, std::abs(v[i]));
        sum += d.node_weight(i) * v[i] * v[i];
    }
    s.l2_norm = std::sqrt(sum * d.cell_volume());
    return s;
}

CoefficientSet make_coefficients(ScalarField a, ScalarField mu, ScalarField nu, ScalarField h,
                                 double tau, bool allow_zero_harvest) {
    const Domain& d = a.domain();
    if (!(mu.domain() == d) || !(nu.domain() == d) || !(h.domain() == d)) {
        throw Error(ErrorKind::InvalidDomain, "coefficient fields live on different domains");
    }
    const FieldStats sa = field_stats(a);
    if (sa.min < tau) {
        throw Error(ErrorKind::InvalidDomain, "diffusion coefficient violates ellipticity floor");
    }
    const FieldStats snu = field_stats(nu);
    if (!(snu.min > 0.0)) throw Error(ErrorKind::InvalidDomain, "nu must be strictly positive");
    const FieldStats sh = field_stats(h);
    if (!allow_zero_harvest && !(sh.min > 0.0)) {
        throw Error(ErrorKind::InvalidDomain, "harvest profile h must be strictly positive");
    }
    if (sh.min < 0.0) throw Error(ErrorKind::InvalidDomain, "harvest profile h must be nonnegative");
    return CoefficientSet{std::move(a), std::move(mu), std::move(nu), std::move(h),
                          snu.min, snu.max, sh.min, sh.max};
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

void write_field_csv(std::ostream& out, const ScalarField& field) {
    const Domain& d = field.domain();
    out << "x,y,value\n";
    for (std::size_t i = 0; i < field.size(); ++i) {
        const Point p = d.coords(i);
        out << format_number(p[0]) << ',' << format_number(p[1]) << ',' << format_number(field[i]) << '\n';
    }
}

void write_field_pgm(std::ostream& out, const ScalarField& field) {
    const Domain& d = field.domain();
    const FieldStats s = field_stats(field);
    const double range = s.max - s.min;
    const int width = d.resolution(0);
    const int height = d.dim() == 2 ? d.resolution(1) : 1;
    out << "P2\n# scale value = " << format_number(s.min) << " + level * "
        << format_number(range / 65535.0) << "\n"
        << width << ' ' << height << "\n65535\n";
    // Top row of the image is the largest y.
    for (int j = height - 1; j >= 0; --j) {
        for (int i = 0; i < width; ++i) {
            const double v = field[d.index(i, j)];
            const long level = range > 0.0 ? std::lround((v - s.min) / range * 65535.0) : 0;
            out << level << (i + 1 < width ? ' ' : '\n');
        }
    }
}

void write_field_file(std::ostream& out, const ScalarField& field) {
    const Domain& d = field.domain();
    out << "domain " << to_string(d.kind()) << ' ' << d.dim();
    for (int axis = 0; axis < d.dim(); ++axis) out << ' ' << format_number(d.length(axis));
    for (int axis = 0; axis < d.dim(); ++axis) out << ' ' << d.resolution(axis);
    out << '\n';
    char buf[64];
    for (double v : field.values()) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << '\n';
    }
}

ScalarField read_field_file(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw Error(ErrorKind::InvalidDomain, "field file is empty");
    std::istringstream hs(header);
    std::string tag, kind;
    int dim = 0;
    hs >> tag >> kind >> dim;
    if (tag != "domain" || !hs) throw Error(ErrorKind::InvalidDomain, "field file header must start with 'domain'");
    if (dim != 1 && dim != 2) throw Error(ErrorKind::InvalidDomain, "field file dim must be 1 or 2");
    std::vector<double> lengths(dim);
    std::vector<int> resolution(dim);
    for (auto& l : lengths) hs >> l;
    for (auto& n : resolution) hs >> n;
    if (!hs) throw Error(ErrorKind::InvalidDomain, "malformed field file header: " + header);
    Domain d = build_domain(parse_boundary_kind(kind), dim, lengths, resolution);
    std::vector<double> values;
    values.reserve(d.size());
    double v;
    while (in >> v) values.push_back(v);
    if (values.size() != d.size()) {
        throw Error(ErrorKind::DimensionMismatch, "field file holds " + std::to_string(values.size()) +
                                                      " values, header expects " + std::to_string(d.size()));
    }
    return ScalarField(std::move(d), std::move(values));
}

}  // namespace harvest
