#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srheat/vector_field.hpp"

#include <random>

using namespace srheat;

namespace {

// Independent oracle: brackets computed with a second, dense polynomial
// representation (term list of (coeff, exponent) with int64 rational pairs),
// kept deliberately separate from MultiPoly internals.
struct OracleTerm {
    long long num, den;
    std::vector<int> exp;
};
using OraclePoly = std::vector<OracleTerm>;

OraclePoly oracle_from(const MultiPoly& p)
{
    OraclePoly out;
    for (const auto& [e, c] : p.terms()) {
        OracleTerm t;
        t.num = static_cast<long long>(boost::multiprecision::numerator(c).convert_to<long long>());
        t.den = static_cast<long long>(boost::multiprecision::denominator(c).convert_to<long long>());
        t.exp.assign(e.begin(), e.end());
        out.push_back(t);
    }
    return out;
}

// d/dx_i of a single term
OracleTerm oracle_diff_term(const OracleTerm& t, int i)
{
    OracleTerm d = t;
    d.num *= t.exp[i];
    d.exp[i] -= 1;
    return d;
}

// evaluate oracle poly at integer point (exact in double for small inputs)
double oracle_eval(const OraclePoly& p, const std::vector<int>& x)
{
    double acc = 0;
    for (const auto& t : p) {
        double v = static_cast<double>(t.num) / t.den;
        for (std::size_t i = 0; i < t.exp.size(); ++i)
            for (int k = 0; k < t.exp[i]; ++k) v *= x[i];
        acc += v;
    }
    return acc;
}

// oracle bracket component j at integer point: sum_k (Xk dYj/dxk - Yk dXj/dxk)
double oracle_bracket_eval(const std::vector<OraclePoly>& X, const std::vector<OraclePoly>& Y,
                           int j, const std::vector<int>& pt)
{
    double acc = 0;
    const int n = static_cast<int>(X.size());
    for (int k = 0; k < n; ++k) {
        OraclePoly dY, dX;
        for (const auto& t : Y[j])
            if (t.exp[k] > 0) dY.push_back(oracle_diff_term(t, k));
        for (const auto& t : X[j])
            if (t.exp[k] > 0) dX.push_back(oracle_diff_term(t, k));
        acc += oracle_eval(X[k], pt) * oracle_eval(dY, pt) - oracle_eval(Y[k], pt) * oracle_eval(dX, pt);
    }
    return acc;
}

MultiPoly mono(int dim, std::initializer_list<std::uint32_t> e, long long num, long long den = 1)
{
    return MultiPoly::monomial(dim, Exponent(e), Rational(num, den));
}

PolyVectorField random_field(int dim, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> coef(-3, 3), expd(0, 2);
    PolyVectorField X(dim);
    for (int j = 0; j < dim; ++j) {
        MultiPoly p(dim);
        for (int t = 0; t < 3; ++t) {
            Exponent e(dim);
            for (int i = 0; i < dim; ++i) e[i] = expd(rng);
            p += MultiPoly::monomial(dim, e, Rational(coef(rng)));
        }
        X.component(j) = p;
    }
    return X;
}

} // namespace

TEST_CASE("polynomial arithmetic basics")
{
    MultiPoly p = mono(2, {1, 0}, 1) + mono(2, {0, 1}, 2);
    MultiPoly q = mono(2, {1, 0}, 1);
    CHECK((p - p).is_zero());
    CHECK((p * q).coefficient({2, 0}) == Rational(1));
    CHECK((p * q).coefficient({1, 1}) == Rational(2));
    CHECK(p.derivative(0) == MultiPoly::constant(2, Rational(1)));
    CHECK(p.eval(std::vector<Rational>{Rational(3), Rational(-1)}) == Rational(1));
    // no stored zeros
    MultiPoly z = p - p;
    CHECK(z.term_count() == 0);
}

TEST_CASE("compose substitutes exactly")
{
    // p(x,y) = x^2 y; substitute x = u+v, y = u
    MultiPoly p = mono(2, {2, 1}, 1);
    MultiPoly u = MultiPoly::variable(2, 0), v = MultiPoly::variable(2, 1);
    MultiPoly r = p.compose({u + v, u});
    CHECK(r.coefficient({3, 0}) == Rational(1));
    CHECK(r.coefficient({2, 1}) == Rational(2));
    CHECK(r.coefficient({1, 2}) == Rational(1));
    CHECK(r.term_count() == 3);
}

TEST_CASE("lie bracket: [d_x1, x1 d_x2] = d_x2")
{
    PolyVectorField X = PolyVectorField::coordinate(2, 0);
    PolyVectorField Y(2);
    Y.component(1) = mono(2, {1, 0}, 1);
    PolyVectorField B = lie_bracket(X, Y);
    CHECK(B.component(0).is_zero());
    CHECK(B.component(1) == MultiPoly::constant(2, Rational(1)));
}

TEST_CASE("lie bracket: Heisenberg generators close to d_z")
{
    PolyVectorField X1(3), X2(3);
    X1.component(0) = MultiPoly::constant(3, Rational(1));
    X1.component(2) = mono(3, {0, 1, 0}, -1, 2);
    X2.component(1) = MultiPoly::constant(3, Rational(1));
    X2.component(2) = mono(3, {1, 0, 0}, 1, 2);
    PolyVectorField B = lie_bracket(X1, X2);
    CHECK(B.component(0).is_zero());
    CHECK(B.component(1).is_zero());
    CHECK(B.component(2) == MultiPoly::constant(3, Rational(1)));

    // independent symbolic differentiation oracle at integer points
    std::vector<OraclePoly> Xo{oracle_from(X1.component(0)), oracle_from(X1.component(1)),
                               oracle_from(X1.component(2))};
    std::vector<OraclePoly> Yo{oracle_from(X2.component(0)), oracle_from(X2.component(1)),
                               oracle_from(X2.component(2))};
    for (const std::vector<int>& pt : {std::vector<int>{0, 0, 0}, {1, -2, 3}, {5, 7, -1}}) {
        for (int j = 0; j < 3; ++j) {
            std::vector<Rational> rp;
            for (int v : pt) rp.emplace_back(v);
            CHECK(to_double(B.component(j).eval(rp)) ==
                  doctest::Approx(oracle_bracket_eval(Xo, Yo, j, pt)).epsilon(1e-14));
        }
    }
}

TEST_CASE("lie bracket antisymmetry: [X,X] = 0")
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        PolyVectorField X = random_field(3, rng);
        CHECK(lie_bracket(X, X).is_zero());
    }
}

TEST_CASE("Jacobi identity on randomized triples")
{
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 5; ++rep) {
        PolyVectorField X = random_field(2, rng), Y = random_field(2, rng), Z = random_field(2, rng);
        PolyVectorField J = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
                            lie_bracket(Z, lie_bracket(X, Y));
        CHECK(J.is_zero());
    }
}

TEST_CASE("dilate_pullback on generators and graded monomials")
{
    Weights w({1, 2});
    // X = d_x1, w=(1,2), eps=2, power=1: homogeneous of degree -1, invariant
    PolyVectorField X = PolyVectorField::coordinate(2, 0);
    CHECK(dilate_pullback(X, w, Rational(2), 1) == X);
    // X = x1^2 d_x2: degree 0 part scales linearly in eps (hand chain rule:
    // (delta_eps^* X)_2 = eps^{-2} (eps x1)^2 = x1^2, times eps^1)
    PolyVectorField Y(2);
    Y.component(1) = mono(2, {2, 0}, 1);
    PolyVectorField Ye = dilate_pullback(Y, w, Rational(3), 1);
    CHECK(Ye.component(1) == mono(2, {2, 0}, 3));
    // X = x1 d_x2 homogeneous degree -1: delta-invariant with power 1
    PolyVectorField Z(2);
    Z.component(1) = mono(2, {1, 0}, 1);
    CHECK(dilate_pullback(Z, w, Rational(-7, 3), 1) == Z);
    CHECK_THROWS_AS(dilate_pullback(Z, w, Rational(0), 1), std::invalid_argument);
}

TEST_CASE("graded_parts bookkeeping")
{
    Weights w({1, 2});
    // Grushin k=1 perturbed: (x1 + x1^2) d_x2 -> {-1: x1 d2, 0: x1^2 d2}
    PolyVectorField X(2);
    X.component(1) = mono(2, {1, 0}, 1) + mono(2, {2, 0}, 1);
    auto parts = graded_parts(X, w, -2, 2);
    REQUIRE(parts.count(-1) == 1);
    REQUIRE(parts.count(0) == 1);
    CHECK(parts.at(-1).component(1) == mono(2, {1, 0}, 1));
    CHECK(parts.at(0).component(1) == mono(2, {2, 0}, 1));
    CHECK(parts.size() == 2);

    auto parts2 = graded_parts(PolyVectorField::coordinate(2, 0), w, -2, 2);
    CHECK(parts2.size() == 1);
    CHECK(parts2.count(-1) == 1);

    CHECK(graded_parts(PolyVectorField::zero(2), w, -2, 2).empty());
}

TEST_CASE("graded parts are exactly homogeneous and reconstruct the field")
{
    std::mt19937_64 rng(11);
    Weights w({1, 1, 2});
    for (int rep = 0; rep < 4; ++rep) {
        PolyVectorField X = random_field(3, rng);
        auto parts = graded_parts(X, w, -2, 10);
        PolyVectorField sum = PolyVectorField::zero(3);
        for (const auto& [deg, P] : parts) {
            sum = sum + P;
            // eps^{-k} delta_eps^* P == P for random rational eps != 0
            for (const Rational& eps : {Rational(3, 2), Rational(-5, 7)}) {
                CHECK(dilate_pullback(P, w, eps, static_cast<int>(-deg)) == P);
            }
        }
        CHECK(sum == X);
    }
}

TEST_CASE("dilation group law")
{
    std::mt19937_64 rng(3);
    Weights w({1, 2, 3});
    PolyVectorField X = random_field(3, rng);
    Rational a(2, 3), b(-5, 4);
    auto lhs = dilate_pullback(dilate_pullback(X, w, a, 0), w, b, 0);
    auto rhs = dilate_pullback(X, w, a * b, 0);
    CHECK(lhs == rhs);
}

TEST_CASE("evaluate")
{
    PolyVectorField X(2);
    X.component(1) = mono(2, {1, 0}, 1);  // x1 d_x2
    auto v = X.evaluate(std::vector<double>{3.0, 0.0});
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 3.0);
    CHECK(PolyVectorField::zero(2).evaluate(std::vector<double>{1.0, 1.0}) ==
          std::vector<double>{0.0, 0.0});
    // Heisenberg X1 at (0,2,0) -> (1,0,-1)
    PolyVectorField X1(3);
    X1.component(0) = MultiPoly::constant(3, Rational(1));
    X1.component(2) = mono(3, {0, 1, 0}, -1, 2);
    auto hv = X1.evaluate(std::vector<double>{0.0, 2.0, 0.0});
    CHECK(hv == std::vector<double>{1.0, 0.0, -1.0});
}

TEST_CASE("JSON round trip")
{
    PolyVectorField X(2);
    X.component(0) = mono(2, {0, 2}, -7, 3);
    X.component(1) = mono(2, {1, 1}, 5) + MultiPoly::constant(2, Rational(1, 9));
    std::string js = to_json(X);
    PolyVectorField Y = field_from_json(js);
    CHECK(X == Y);
    CHECK(to_json(Y) == js);
}

TEST_CASE("dimension mismatch raises")
{
    PolyVectorField X(2), Y(3);
    CHECK_THROWS_AS(lie_bracket(X, Y), DimensionMismatch);
}

TEST_CASE("compiled evaluation agrees with exact evaluation")
{
    std::mt19937_64 rng(19);
    PolyVectorField X = random_field(3, rng);
    CompiledField C(X);
    std::vector<double> x{0.3, -1.7, 2.2}, out(3);
    C.eval(x.data(), out.data());
    auto exact = X.evaluate(x);
    for (int j = 0; j < 3; ++j) CHECK(out[j] == doctest::Approx(exact[j]).epsilon(1e-14));
}
