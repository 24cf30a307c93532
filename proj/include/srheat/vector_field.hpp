#pragma once

#include "srheat/multipoly.hpp"

#include <map>
#include <string>
#include <vector>

namespace srheat {

// Nondecreasing positive integer weights, one per coordinate.
struct Weights {
    std::vector<int> w;

    Weights() = default;
    explicit Weights(std::vector<int> ww);

    int dim() const { return static_cast<int>(w.size()); }
    int max() const;
    long Q() const;  // sum of weights
};

// Vector field on R^n with multivariate-polynomial components:
// X = sum_j components[j] * d/dx_j.
class PolyVectorField {
public:
    explicit PolyVectorField(int dim);
    explicit PolyVectorField(std::vector<MultiPoly> components);

    static PolyVectorField zero(int dim) { return PolyVectorField(dim); }
    // d/dx_j
    static PolyVectorField coordinate(int dim, int j);

    int dim() const { return dim_; }
    const MultiPoly& component(int j) const { return comps_[j]; }
    MultiPoly& component(int j) { return comps_[j]; }
    const std::vector<MultiPoly>& components() const { return comps_; }
    bool is_zero() const;

    PolyVectorField operator+(const PolyVectorField& o) const;
    PolyVectorField operator-(const PolyVectorField& o) const;
    PolyVectorField operator*(const Rational& c) const;
    bool operator==(const PolyVectorField& o) const { return comps_ == o.comps_; }

    // Apply the field to a scalar polynomial as a derivation: X f = sum_j a_j d_j f.
    MultiPoly apply(const MultiPoly& f) const;

    std::vector<Rational> evaluate(const std::vector<Rational>& point) const;
    std::vector<double> evaluate(const std::vector<double>& point) const;

private:
    int dim_;
    std::vector<MultiPoly> comps_;
};

// [X,Y] = XY - YX as a derivation; exact.
PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y);

// eps^power * delta_eps^* X, exact in the rational eps != 0.
// (delta_eps^* X)_j(x) = eps^{-w_j} X_j(delta_eps(x)).
PolyVectorField dilate_pullback(const PolyVectorField& X, const Weights& w,
                                const Rational& eps, int power);

// Split X into delta-homogeneous parts: the monomial x^alpha d_j has weighted
// degree <alpha,w> - w_j. Returns parts with degree in [min_deg, max_deg];
// keys are the degrees, zero parts omitted.
std::map<long, PolyVectorField> graded_parts(const PolyVectorField& X, const Weights& w,
                                             long min_deg, long max_deg);

// Fast double evaluation of a field (all components compiled).
class CompiledField {
public:
    CompiledField() = default;
    explicit CompiledField(const PolyVectorField& X);
    int dim() const { return dim_; }
    // out[j] = X_j(x); out and x may not alias.
    void eval(const double* x, double* out) const;

private:
    int dim_ = 0;
    std::vector<CompiledPoly> comps_;
};

// --- JSON (de)serialization -------------------------------------------------
// Schema: {"dim": n, "components": [[{"exp":[...],"num":"...","den":"..."},...],...]}
// num/den are decimal strings (exact; may exceed 64 bits).
std::string to_json(const PolyVectorField& X);
PolyVectorField field_from_json(const std::string& text);
std::string poly_to_json(const MultiPoly& p);
MultiPoly poly_from_json(const std::string& text);

} // namespace srheat
