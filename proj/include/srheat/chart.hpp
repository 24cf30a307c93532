#pragma once

#include "srheat/flag.hpp"

#include <vector>

namespace srheat {

struct ChartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FrameNotAdapted : ChartError {
    using ChartError::ChartError;
};
struct InconclusiveOrder : ChartError {
    using ChartError::ChartError;
};

// Privileged-coordinate chart at a base point. forward_map is the weighted-
// degree-trunc_order jet of x -> exp(sum x_i Z_i)(q) (manifold-valued,
// forward_map(0) = q exactly); inverse_map is its compositional inverse jet in
// u = y - q, so psi(y) = inverse_map(y - q) and psi(q) = 0.
struct PrivilegedChart {
    std::vector<Rational> base_point;
    Weights weights;
    std::vector<PolyVectorField> frame;  // Z_1..Z_n, ordered by weight
    std::vector<MultiPoly> forward_map;  // polynomials in chart coords x
    std::vector<MultiPoly> inverse_map;  // polynomials in u = y - q
    int trunc_order = 0;

    int dim() const { return static_cast<int>(base_point.size()); }

    // psi^{-1}(x), double precision.
    std::vector<double> to_manifold(const std::vector<double>& x) const;
    // psi(y), double precision.
    std::vector<double> to_chart(const std::vector<double>& y) const;
};

// Builds the exponential chart from the flag's adapted bracket frame.
// trunc_order must be >= flag.r; default used by callers is 2r+2.
PrivilegedChart build_exponential_chart(const std::vector<PolyVectorField>& fields,
                                        const FlagData& flag,
                                        const std::vector<Rational>& point,
                                        int trunc_order);

// Computed nonholonomic order of each chart coordinate (smallest word length k
// with a nonvanishing iterated derivative L_{X_{j1}}...L_{X_{jk}} x_j at q).
struct OrderReport {
    std::vector<int> orders;
    bool matches_weights = false;
};
OrderReport verify_orders(const PrivilegedChart& chart,
                          const std::vector<PolyVectorField>& fields);

// delta_eps(x) componentwise; eps may be negative or zero.
std::vector<double> dilate(const std::vector<double>& x, const Weights& w, double eps);

// Pushforward psi_* X expressed in chart coordinates, exact to weighted degree
// trunc_order - max(w).
PolyVectorField push_field(const PrivilegedChart& chart, const PolyVectorField& X);

// Jet-compose the chart coordinate functions into manifold coordinates:
// g_j(y) = inverse_map_j(y - q). Used by verify_orders and tests.
std::vector<MultiPoly> chart_coordinate_functions(const PrivilegedChart& chart);

// Fallback toward privileged coordinates when verify_orders fails for an
// adapted chart: subtracts lower-order monomials in already-verified
// coordinates, in increasing weight order. Returns true if the chart changed.
bool apply_triangular_correction(PrivilegedChart& chart,
                                 const std::vector<PolyVectorField>& fields);

std::string chart_to_json(const PrivilegedChart& chart);

} // namespace srheat
