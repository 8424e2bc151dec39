#pragma once

#include "harvest/grid.hpp"
#include "harvest/operators.hpp"

namespace harvest {

// Coefficients together with the assembled diffusion operator; every solver
// in the library works on this pair.
struct Model {
    CoefficientSet coeffs;
    SparseOperator op;

    const Domain& domain() const { return op.domain(); }
    std::span<const double> mass() const { return op.mass(); }
};

inline Model make_model(CoefficientSet coeffs) {
    SparseOperator op = assemble(coeffs.a);
    return Model{std::move(coeffs), std::move(op)};
}

}  // namespace harvest
