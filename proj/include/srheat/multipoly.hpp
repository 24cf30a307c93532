#pragma once

#include "srheat/rational.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace srheat {

// Exponent multi-index of a monomial, length == dim.
using Exponent = std::vector<std::uint32_t>;

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Multivariate polynomial with exact rational coefficients.
// Invariants: no stored zero coefficients, every exponent has length dim.
class MultiPoly {
public:
    explicit MultiPoly(int dim = 1);

    static MultiPoly zero(int dim) { return MultiPoly(dim); }
    static MultiPoly constant(int dim, const Rational& c);
    // The monomial c * x^e.
    static MultiPoly monomial(int dim, const Exponent& e, const Rational& c);
    // The coordinate function x_i (0-based).
    static MultiPoly variable(int dim, int i);

    int dim() const { return dim_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }
    const std::map<Exponent, Rational>& terms() const { return terms_; }

    Rational coefficient(const Exponent& e) const;
    void set_coefficient(const Exponent& e, const Rational& c);

    MultiPoly& operator+=(const MultiPoly& o);
    MultiPoly& operator-=(const MultiPoly& o);
    MultiPoly operator+(const MultiPoly& o) const;
    MultiPoly operator-(const MultiPoly& o) const;
    MultiPoly operator*(const MultiPoly& o) const;
    MultiPoly operator*(const Rational& c) const;
    MultiPoly operator-() const;
    bool operator==(const MultiPoly& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

    // d/dx_i, exact.
    MultiPoly derivative(int i) const;

    // Exact evaluation at a rational point.
    Rational eval(const std::vector<Rational>& x) const;
    // Floating-point evaluation (the only lossy boundary).
    double eval(const std::vector<double>& x) const;

    // Substitute x_i := subs[i]; subs polynomials share a common dimension.
    // Optional truncation: drop monomials of plain degree > max_plain_degree
    // after substitution (max_plain_degree < 0 means no truncation).
    MultiPoly compose(const std::vector<MultiPoly>& subs, int max_plain_degree = -1) const;

    // Weighted degree <alpha, w> of a monomial; degree bookkeeping for the
    // anisotropic grading.
    static long weighted_degree(const Exponent& e, const std::vector<int>& w);
    long min_weighted_degree(const std::vector<int>& w) const;  // 0 for the zero poly
    long max_weighted_degree(const std::vector<int>& w) const;
    int plain_degree() const;  // -1 for the zero poly

    // Keep only monomials with weighted degree <= bound.
    MultiPoly truncate_weighted(const std::vector<int>& w, long bound) const;
    // Keep only monomials of the given weighted degree.
    MultiPoly weighted_part(const std::vector<int>& w, long degree) const;

    // x^alpha -> prod_i (s_i)^{alpha_i} * x^alpha  (diagonal scaling x_i -> s_i x_i).
    MultiPoly scale_variables(const std::vector<Rational>& s) const;

private:
    void check_dim(const MultiPoly& o) const;
    int dim_;
    std::map<Exponent, Rational> terms_;
};

// Fast double-only view of a polynomial for hot loops (MC stepping, grid
// assembly). Built once, evaluated many times.
class CompiledPoly {
public:
    CompiledPoly() = default;
    explicit CompiledPoly(const MultiPoly& p);
    double eval(const double* x) const;
    bool is_zero() const { return coeffs_.empty(); }

private:
    int dim_ = 0;
    std::vector<double> coeffs_;
    std::vector<std::uint32_t> exps_;  // flattened, dim per term
};

} // namespace srheat
