#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srheat/chart.hpp"
#include "srheat/corpus.hpp"

using namespace srheat;

namespace {

std::vector<Rational> origin(int n) { return std::vector<Rational>(n, Rational(0)); }

PrivilegedChart make_chart(const ModelSpec& m, int trunc = 0)
{
    FlagData f = compute_flag(m.fields, m.base_point);
    if (trunc <= 0) trunc = 2 * f.r + 2;
    return build_exponential_chart(m.fields, f, m.base_point, trunc);
}

// round trip inverse(forward(x)) == x through weighted degree trunc_order
void check_round_trip(const PrivilegedChart& chart)
{
    const int n = chart.dim();
    std::vector<MultiPoly> Ft(n, MultiPoly(n));
    for (int j = 0; j < n; ++j)
        Ft[j] = chart.forward_map[j] - MultiPoly::constant(n, chart.base_point[j]);
    for (int j = 0; j < n; ++j) {
        MultiPoly comp = chart.inverse_map[j].compose(Ft, chart.trunc_order);
        MultiPoly diff =
            (comp - MultiPoly::variable(n, j)).truncate_weighted(chart.weights.w, chart.trunc_order);
        // drop plain degrees beyond the jet's validity
        MultiPoly tail(n);
        for (const auto& [e, c] : diff.terms()) {
            long d = 0;
            for (auto ei : e) d += ei;
            if (d <= chart.trunc_order) tail.set_coefficient(e, c);
        }
        CHECK(tail.is_zero());
    }
}

} // namespace

TEST_CASE("Euclidean chart is a translation")
{
    ModelSpec m = corpus_get("euclidean2");
    std::vector<Rational> q{Rational(3), Rational(-2)};
    ModelSpec shifted = m;
    shifted.base_point = q;
    PrivilegedChart chart = make_chart(shifted);
    // forward(x) = q + x exactly
    for (int j = 0; j < 2; ++j) {
        MultiPoly expect = MultiPoly::variable(2, j) + MultiPoly::constant(2, q[j]);
        CHECK(chart.forward_map[j] == expect);
    }
    OrderReport rep = verify_orders(chart, m.fields);
    CHECK(rep.orders == std::vector<int>{1, 1});
    CHECK(rep.matches_weights);
}

TEST_CASE("Grushin chart at 0 is the identity on coordinates")
{
    ModelSpec m = corpus_get("grushin_k1");
    PrivilegedChart chart = make_chart(m);
    // frame = (X1, [X1,X2]) with [X1,X2] = d2; exp(a X1 + b d2)(0) = (a, b)
    CHECK(chart.forward_map[0] == MultiPoly::variable(2, 0));
    CHECK(chart.forward_map[1] == MultiPoly::variable(2, 1));
    OrderReport rep = verify_orders(chart, m.fields);
    CHECK(rep.orders == std::vector<int>{1, 2});
    CHECK(rep.matches_weights);
}

TEST_CASE("Grushin k=2 orders (1,3)")
{
    ModelSpec m = corpus_get("grushin_k2");
    PrivilegedChart chart = make_chart(m);
    OrderReport rep = verify_orders(chart, m.fields);
    CHECK(rep.orders == std::vector<int>{1, 3});
    CHECK(rep.matches_weights);
}

TEST_CASE("Heisenberg exponential chart: polynomial, verified orders (1,1,2)")
{
    ModelSpec m = corpus_get("heisenberg");
    PrivilegedChart chart = make_chart(m);
    // flow of a X1 + b X2 + c d_z from 0 terminates (nilpotent):
    // x=a, y=b, z = c (the X1,X2 area contributions cancel at the origin)
    CHECK(chart.forward_map[0] == MultiPoly::variable(3, 0));
    CHECK(chart.forward_map[1] == MultiPoly::variable(3, 1));
    CHECK(chart.forward_map[2] == MultiPoly::variable(3, 2));
    OrderReport rep = verify_orders(chart, m.fields);
    CHECK(rep.orders == std::vector<int>{1, 1, 2});
    CHECK(rep.matches_weights);
    check_round_trip(chart);
}

TEST_CASE("Martinet chart: exact flow jet and orders (1,1,3)")
{
    ModelSpec m = corpus_get("martinet");
    PrivilegedChart chart = make_chart(m);
    // V = a d_x + b (d_y + x^2 d_z) + 2c d_z from 0:
    // x=a, y=b, z = b a^2/3 + 2c
    CHECK(chart.forward_map[0] == MultiPoly::variable(3, 0));
    CHECK(chart.forward_map[1] == MultiPoly::variable(3, 1));
    MultiPoly zmap = chart.forward_map[2];
    CHECK(zmap.coefficient({2, 1, 0}) == Rational(1, 3));
    CHECK(zmap.coefficient({0, 0, 1}) == Rational(2));
    OrderReport rep = verify_orders(chart, m.fields);
    CHECK(rep.orders == std::vector<int>{1, 1, 3});
    CHECK(rep.matches_weights);
    check_round_trip(chart);
}

TEST_CASE("round trip and verified orders across the corpus")
{
    for (const auto& name : corpus_names()) {
        ModelSpec m = corpus_get(name);
        FlagData f = compute_flag(m.fields, m.base_point);
        PrivilegedChart chart = build_exponential_chart(m.fields, f, m.base_point, 2 * f.r + 2);
        check_round_trip(chart);
        OrderReport rep = verify_orders(chart, m.fields);
        CHECK(rep.matches_weights);
        // forward_map(0) = base point exactly
        std::vector<Rational> zero(m.dim, Rational(0));
        for (int j = 0; j < m.dim; ++j)
            CHECK(chart.forward_map[j].eval(zero) == m.base_point[j]);
    }
}

TEST_CASE("chart at a non-origin base point")
{
    ModelSpec m = corpus_get("grushin_k1");
    m.base_point = {Rational(1, 2), Rational(-1, 3)};  // regular point of Grushin
    FlagData f = compute_flag(m.fields, m.base_point);
    CHECK(f.weights.w == std::vector<int>{1, 1});  // rank 2 immediately away from x1=0
    PrivilegedChart chart = build_exponential_chart(m.fields, f, m.base_point, 4);
    check_round_trip(chart);
    CHECK(verify_orders(chart, m.fields).matches_weights);
}

TEST_CASE("dilate: componentwise powers, negative and zero eps")
{
    Weights w({1, 2});
    CHECK(dilate({3.0, 5.0}, w, -1.0) == std::vector<double>{-3.0, 5.0});
    CHECK(dilate({3.0, 5.0}, w, 0.0) == std::vector<double>{0.0, 0.0});
    Weights w3({1, 1, 2});
    CHECK(dilate({2.0, 2.0, 4.0}, w3, 0.5) == std::vector<double>{1.0, 1.0, 1.0});
    // group law
    std::vector<double> x{1.5, -2.0};
    auto a = dilate(dilate(x, w, 0.5), w, -3.0);
    auto b = dilate(x, w, -1.5);
    CHECK(a[0] == doctest::Approx(b[0]));
    CHECK(a[1] == doctest::Approx(b[1]));
}

TEST_CASE("push_field: identity and translation charts leave fields alone")
{
    ModelSpec m = corpus_get("grushin_k1");
    PrivilegedChart chart = make_chart(m);  // identity chart at 0
    for (const auto& X : m.fields) {
        PolyVectorField pushed = push_field(chart, X);
        CHECK(pushed == X);
    }
    // translation chart: constant field unchanged
    ModelSpec e = corpus_get("euclidean2");
    e.base_point = {Rational(2), Rational(7)};
    PrivilegedChart tr = make_chart(e);
    PolyVectorField C(2);
    C.component(0) = MultiPoly::constant(2, Rational(4));
    C.component(1) = MultiPoly::constant(2, Rational(-1));
    CHECK(push_field(tr, C) == C);
}

TEST_CASE("push_field cross-module consistency: Heisenberg X1 keeps its degree -1 part")
{
    ModelSpec m = corpus_get("heisenberg");
    PrivilegedChart chart = make_chart(m);
    PolyVectorField pushed = push_field(chart, m.fields[0]);
    auto parts = graded_parts(pushed, chart.weights, -1, -1);
    REQUIRE(parts.count(-1) == 1);
    // identity chart here, so the hat is X1 itself
    CHECK(parts.at(-1) == m.fields[0]);
}

TEST_CASE("triangular correction repairs a skewed adapted chart")
{
    // Grushin with a deliberately bad extra term: coordinate x2' = x2 + x1
    // has nonholonomic order 1 < 2; the correction must restore order 2.
    ModelSpec m = corpus_get("grushin_k1");
    PrivilegedChart chart = make_chart(m);
    chart.inverse_map[1] += MultiPoly::variable(2, 0);  // skew
    OrderReport before = verify_orders(chart, m.fields);
    CHECK_FALSE(before.matches_weights);
    bool changed = apply_triangular_correction(chart, m.fields);
    CHECK(changed);
    OrderReport after = verify_orders(chart, m.fields);
    CHECK(after.matches_weights);
    check_round_trip(chart);
}

TEST_CASE("frame rank check raises FrameNotAdapted")
{
    ModelSpec m = corpus_get("grushin_k1");
    FlagData f = compute_flag(m.fields, m.base_point);
    // sabotage the frame: replace the second entry with a field vanishing at 0
    f.bracket_frame[1].field = m.fields[1];  // x1^k d2 vanishes at x1=0
    CHECK_THROWS_AS(build_exponential_chart(m.fields, f, m.base_point, 4), FrameNotAdapted);
}
