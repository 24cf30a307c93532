#include "srheat/chart.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace srheat {

using nlohmann::json;

namespace {

// Exact inverse of a rational matrix by Gauss-Jordan.
std::vector<std::vector<Rational>> rational_inverse(std::vector<std::vector<Rational>> a)
{
    const std::size_t n = a.size();
    std::vector<std::vector<Rational>> inv(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a[pivot][col] == 0) ++pivot;
        if (pivot == n) throw FrameNotAdapted("frame matrix is singular at the base point");
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        Rational p = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col || a[i][col] == 0) continue;
            Rational f = a[i][col];
            for (std::size_t j = 0; j < n; ++j) {
                a[i][j] -= f * a[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

// Any exact solution of M c = rhs (rows = equations); zero for free variables.
// Throws ChartError when inconsistent.
std::vector<Rational> solve_rational(std::vector<std::vector<Rational>> M, std::vector<Rational> rhs)
{
    const std::size_t rows = M.size();
    const std::size_t cols = rows ? M.front().size() : 0;
    std::vector<std::size_t> pivot_col;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t p = rank;
        while (p < rows && M[p][col] == 0) ++p;
        if (p == rows) continue;
        std::swap(M[rank], M[p]);
        std::swap(rhs[rank], rhs[p]);
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == rank || M[i][col] == 0) continue;
            Rational f = M[i][col] / M[rank][col];
            for (std::size_t j = col; j < cols; ++j) M[i][j] -= f * M[rank][j];
            rhs[i] -= f * rhs[rank];
        }
        pivot_col.push_back(col);
        ++rank;
    }
    for (std::size_t i = rank; i < rows; ++i)
        if (rhs[i] != 0) throw ChartError("triangular correction: inconsistent linear system");
    std::vector<Rational> c(cols, Rational(0));
    for (std::size_t i = 0; i < rank; ++i) c[pivot_col[i]] = rhs[i] / M[i][pivot_col[i]];
    return c;
}

// Truncate to plain total degree <= bound.
MultiPoly truncate_plain(const MultiPoly& p, int bound)
{
    MultiPoly q(p.dim());
    for (const auto& [e, c] : p.terms()) {
        long d = 0;
        for (auto ei : e) d += ei;
        if (d <= bound) q.set_coefficient(e, c);
    }
    return q;
}

// Compositional inverse jet: F has F(0) = 0 and invertible linear part; returns
// G with G(F(x)) = x through plain degree trunc.
std::vector<MultiPoly> invert_jet(const std::vector<MultiPoly>& F, int trunc)
{
    const int n = static_cast<int>(F.size());
    std::vector<std::vector<Rational>> A(n, std::vector<Rational>(n));
    for (int j = 0; j < n; ++j) {
        Exponent e(n, 0);
        for (int i = 0; i < n; ++i) {
            e[i] = 1;
            A[j][i] = F[j].coefficient(e);
            e[i] = 0;
        }
    }
    auto invA = rational_inverse(A);

    std::vector<MultiPoly> Nl(n, MultiPoly(n));
    for (int j = 0; j < n; ++j) {
        MultiPoly lin(n);
        for (int i = 0; i < n; ++i) lin += MultiPoly::variable(n, i) * A[j][i];
        Nl[j] = F[j] - lin;
    }
    std::vector<MultiPoly> G(n, MultiPoly(n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) G[j] += MultiPoly::variable(n, i) * invA[j][i];
    for (int iter = 0; iter < trunc; ++iter) {
        std::vector<MultiPoly> NG(n, MultiPoly(n));
        for (int j = 0; j < n; ++j) NG[j] = Nl[j].compose(G, trunc);
        std::vector<MultiPoly> Gnew(n, MultiPoly(n));
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i)
                Gnew[j] += (MultiPoly::variable(n, i) - NG[i]) * invA[j][i];
            Gnew[j] = truncate_plain(Gnew[j], trunc);
        }
        if (Gnew == G) break;
        G = std::move(Gnew);
    }
    return G;
}

// Smallest k <= kmax with some nonvanishing length-k iterated derivative of f
// at q; also returns the length-k derivative values indexed by word when
// requested (for the correction's linear system).
int nonholonomic_order(const MultiPoly& f, const std::vector<PolyVectorField>& fields,
                       const std::vector<Rational>& q, int kmax)
{
    if (f.eval(q) != 0) return 0;
    std::vector<MultiPoly> level{f};
    for (int k = 1; k <= kmax; ++k) {
        std::vector<MultiPoly> next;
        next.reserve(level.size() * fields.size());
        bool nonzero = false;
        for (const auto& X : fields) {
            for (const auto& p : level) {
                MultiPoly d = X.apply(p);
                if (!nonzero && d.eval(q) != 0) nonzero = true;
                next.push_back(std::move(d));
            }
        }
        if (nonzero) return k;
        level = std::move(next);
    }
    return -1;
}

// All length-k iterated derivative values of f at q (word-indexed, fixed order).
std::vector<Rational> word_derivatives(const MultiPoly& f, const std::vector<PolyVectorField>& fields,
                                       const std::vector<Rational>& q, int k)
{
    std::vector<MultiPoly> level{f};
    for (int s = 0; s < k; ++s) {
        std::vector<MultiPoly> next;
        next.reserve(level.size() * fields.size());
        for (const auto& X : fields)
            for (const auto& p : level) next.push_back(X.apply(p));
        level = std::move(next);
    }
    std::vector<Rational> vals;
    vals.reserve(level.size());
    for (const auto& p : level) vals.push_back(p.eval(q));
    return vals;
}

// Monomial exponents over coordinates 0..n-1 with weighted degree exactly k,
// using only coordinates flagged usable, plain degree >= 2 or degree-1 in a
// lower-weight coordinate.
void enumerate_monomials(int n, const std::vector<int>& w, const std::vector<bool>& usable,
                         long target, Exponent& cur, int from, std::vector<Exponent>& out)
{
    if (target == 0) {
        long total = 0;
        for (auto e : cur) total += e;
        if (total >= 1) out.push_back(cur);
        return;
    }
    for (int i = from; i < n; ++i) {
        if (!usable[i] || w[i] > target) continue;
        cur[i] += 1;
        enumerate_monomials(n, w, usable, target - w[i], cur, i, out);
        cur[i] -= 1;
    }
}

} // namespace

std::vector<double> PrivilegedChart::to_manifold(const std::vector<double>& x) const
{
    std::vector<double> y(dim());
    for (int j = 0; j < dim(); ++j) y[j] = forward_map[j].eval(x);
    return y;
}

std::vector<double> PrivilegedChart::to_chart(const std::vector<double>& y) const
{
    std::vector<double> u(dim());
    for (int j = 0; j < dim(); ++j) u[j] = y[j] - to_double(base_point[j]);
    std::vector<double> x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = inverse_map[j].eval(u);
    return x;
}

std::vector<MultiPoly> chart_coordinate_functions(const PrivilegedChart& chart)
{
    const int n = chart.dim();
    std::vector<MultiPoly> shift;  // u_i = y_i - q_i
    for (int i = 0; i < n; ++i)
        shift.push_back(MultiPoly::variable(n, i) - MultiPoly::constant(n, chart.base_point[i]));
    std::vector<MultiPoly> g(n, MultiPoly(n));
    for (int j = 0; j < n; ++j) g[j] = chart.inverse_map[j].compose(shift);
    return g;
}

OrderReport verify_orders(const PrivilegedChart& chart, const std::vector<PolyVectorField>& fields)
{
    const int n = chart.dim();
    OrderReport rep;
    rep.orders.assign(n, -1);
    std::vector<MultiPoly> g = chart_coordinate_functions(chart);
    for (int j = 0; j < n; ++j) {
        int k = nonholonomic_order(g[j], fields, chart.base_point, chart.trunc_order);
        if (k < 0)
            throw InconclusiveOrder("all nonholonomic derivatives of coordinate " + std::to_string(j + 1) +
                                    " vanish up to the truncation order");
        rep.orders[j] = k;
    }
    rep.matches_weights = true;
    for (int j = 0; j < n; ++j)
        if (rep.orders[j] != chart.weights.w[j]) rep.matches_weights = false;
    return rep;
}

// Triangular correction toward privileged coordinates: when ord(x_j) < w_j,
// subtract from x_j a combination of monomials in already-verified coordinates
// of the same weighted degree, chosen to cancel every failing iterated
// derivative; coordinates are processed in increasing weight order.
bool apply_triangular_correction(PrivilegedChart& chart, const std::vector<PolyVectorField>& fields)
{
    const int n = chart.dim();
    bool changed = false;
    std::vector<bool> usable(n, false);
    std::vector<MultiPoly> g = chart_coordinate_functions(chart);

    for (int j = 0; j < n; ++j) {
        const int wj = chart.weights.w[j];
        for (int round = 0; round < wj; ++round) {
            int k = nonholonomic_order(g[j], fields, chart.base_point, chart.trunc_order);
            if (k < 0) throw InconclusiveOrder("correction: coordinate derivative search inconclusive");
            if (k >= wj) break;

            std::vector<Exponent> monos;
            Exponent cur(n, 0);
            enumerate_monomials(n, chart.weights.w, usable, k, cur, 0, monos);
            if (monos.empty())
                throw ChartError("triangular correction: no candidate monomials at order " + std::to_string(k));

            std::vector<Rational> rhs = word_derivatives(g[j], fields, chart.base_point, k);
            std::vector<std::vector<Rational>> M(rhs.size(), std::vector<Rational>(monos.size()));
            for (std::size_t c = 0; c < monos.size(); ++c) {
                MultiPoly basis = MultiPoly::constant(n, Rational(1));
                for (int i = 0; i < n; ++i)
                    for (std::uint32_t e = 0; e < monos[c][i]; ++e) basis = basis * g[i];
                std::vector<Rational> col = word_derivatives(basis, fields, chart.base_point, k);
                for (std::size_t rr = 0; rr < rhs.size(); ++rr) M[rr][c] = col[rr];
            }
            std::vector<Rational> coef = solve_rational(M, rhs);

            MultiPoly delta_g(n), delta_inv(n);
            for (std::size_t c = 0; c < monos.size(); ++c) {
                if (coef[c] == 0) continue;
                MultiPoly mg = MultiPoly::constant(n, coef[c]);
                MultiPoly mi = MultiPoly::constant(n, coef[c]);
                for (int i = 0; i < n; ++i) {
                    for (std::uint32_t e = 0; e < monos[c][i]; ++e) {
                        mg = mg * g[i];
                        mi = mi * chart.inverse_map[i];
                    }
                }
                delta_g += mg;
                delta_inv += mi;
            }
            g[j] -= delta_g;
            chart.inverse_map[j] =
                truncate_plain(chart.inverse_map[j] - delta_inv, chart.trunc_order);
            changed = true;
        }
        usable[j] = true;
    }

    if (changed) {
        // rebuild the forward map as the inverse jet of the corrected chart
        std::vector<MultiPoly> H = invert_jet(chart.inverse_map, chart.trunc_order);
        for (int j = 0; j < n; ++j) {
            chart.forward_map[j] = (MultiPoly::constant(n, chart.base_point[j]) + H[j])
                                       .truncate_weighted(chart.weights.w, chart.trunc_order);
        }
    }
    return changed;
}

PrivilegedChart build_exponential_chart(const std::vector<PolyVectorField>& fields,
                                        const FlagData& flag,
                                        const std::vector<Rational>& point, int trunc_order)
{
    const int n = static_cast<int>(point.size());
    if (static_cast<int>(flag.bracket_frame.size()) != n)
        throw FrameNotAdapted("bracket frame does not have dim elements");
    if (trunc_order < flag.r)
        throw std::invalid_argument("build_exponential_chart: trunc_order must be >= r");

    std::vector<std::vector<Rational>> frame_vals;
    for (const auto& e : flag.bracket_frame) frame_vals.push_back(e.field.evaluate(point));
    if (rational_rank(frame_vals) != n) throw FrameNotAdapted("frame fails rank check at the point");

    PrivilegedChart chart;
    chart.base_point = point;
    chart.weights = flag.weights;
    chart.trunc_order = trunc_order;
    for (const auto& e : flag.bracket_frame) chart.frame.push_back(e.field);

    // Forward map: jet of the time-1 flow of V = sum_i x_i Z_i from the base
    // point. Work in 2n variables (x, y); V differentiates in y only, so
    // V^k y_j is homogeneous of plain degree k in x — the series stopped at
    // k = trunc_order is the exact weighted-degree-trunc_order jet.
    const int N2 = 2 * n;
    std::vector<std::vector<MultiPoly>> frame_big(n);
    for (int i = 0; i < n; ++i) {
        frame_big[i].assign(n, MultiPoly(N2));
        for (int l = 0; l < n; ++l) {
            for (const auto& [e, c] : chart.frame[i].component(l).terms()) {
                Exponent be(N2, 0);
                for (int kk = 0; kk < n; ++kk) be[n + kk] = e[kk];
                frame_big[i][l].set_coefficient(be, c);
            }
        }
    }
    auto apply_V = [&](const MultiPoly& f) {
        MultiPoly out(N2);
        for (int i = 0; i < n; ++i) {
            MultiPoly xi = MultiPoly::variable(N2, i);
            for (int l = 0; l < n; ++l) {
                if (frame_big[i][l].is_zero()) continue;
                MultiPoly df = f.derivative(n + l);
                if (df.is_zero()) continue;
                out += xi * frame_big[i][l] * df;
            }
        }
        return out;
    };
    std::vector<MultiPoly> subs_yq;
    for (int i = 0; i < n; ++i) subs_yq.push_back(MultiPoly::variable(n, i));
    for (int i = 0; i < n; ++i) subs_yq.push_back(MultiPoly::constant(n, point[i]));

    chart.forward_map.assign(n, MultiPoly(n));
    for (int j = 0; j < n; ++j) {
        MultiPoly fk = MultiPoly::variable(N2, n + j);  // y_j
        MultiPoly acc(n);
        Rational fact(1);
        for (int k = 0; k <= trunc_order; ++k) {
            if (k > 0) {
                fk = apply_V(fk);
                fact *= Rational(k);
                if (fk.is_zero()) break;
            }
            acc += fk.compose(subs_yq) * (Rational(1) / fact);
        }
        chart.forward_map[j] = acc.truncate_weighted(chart.weights.w, trunc_order);
    }

    // Inverse jet in u = y - q.
    std::vector<MultiPoly> Ft(n, MultiPoly(n));
    for (int j = 0; j < n; ++j)
        Ft[j] = chart.forward_map[j] - MultiPoly::constant(n, point[j]);
    chart.inverse_map = invert_jet(Ft, trunc_order);

    // Exponential charts from adapted frames are privileged; the correction is
    // a fallback for degenerate truncation interactions.
    OrderReport rep = verify_orders(chart, fields);
    if (!rep.matches_weights) apply_triangular_correction(chart, fields);
    return chart;
}

std::vector<double> dilate(const std::vector<double>& x, const Weights& w, double eps)
{
    if (static_cast<int>(x.size()) != w.dim()) throw DimensionMismatch("dilate: dimension mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = 1.0;
        for (int k = 0; k < w.w[i]; ++k) f *= eps;
        out[i] = f * x[i];
    }
    return out;
}

PolyVectorField push_field(const PrivilegedChart& chart, const PolyVectorField& X)
{
    const int n = chart.dim();
    if (X.dim() != n) throw DimensionMismatch("push_field: dimension mismatch");
    if (chart.trunc_order < chart.weights.max() + 1)
        throw ChartError("push_field: chart truncation order too small (TruncationLoss)");

    // (psi_* X)_j(x) = sum_k (d_k G_j)(F(x) - q) * X_k(F(x))
    std::vector<MultiPoly> Ft(n, MultiPoly(n));
    for (int j = 0; j < n; ++j)
        Ft[j] = chart.forward_map[j] - MultiPoly::constant(n, chart.base_point[j]);

    const long out_trunc = chart.trunc_order - chart.weights.max();
    PolyVectorField out(n);
    for (int j = 0; j < n; ++j) {
        MultiPoly acc(n);
        for (int k = 0; k < n; ++k) {
            MultiPoly dG = chart.inverse_map[j].derivative(k);
            if (dG.is_zero()) continue;
            MultiPoly dG_at = dG.compose(Ft, chart.trunc_order);
            MultiPoly Xk = X.component(k).compose(chart.forward_map, chart.trunc_order);
            if (Xk.is_zero()) continue;
            acc += dG_at * Xk;
        }
        out.component(j) = acc.truncate_weighted(chart.weights.w, out_trunc);
    }
    return out;
}

std::string chart_to_json(const PrivilegedChart& chart)
{
    json j;
    json bp = json::array();
    for (const auto& c : chart.base_point) bp.push_back(to_string(c));
    j["base_point"] = bp;
    j["weights"] = chart.weights.w;
    j["trunc_order"] = chart.trunc_order;
    json fw = json::array(), iv = json::array();
    for (const auto& p : chart.forward_map) fw.push_back(json::parse(poly_to_json(p)));
    for (const auto& p : chart.inverse_map) iv.push_back(json::parse(poly_to_json(p)));
    j["forward_map"] = fw;
    j["inverse_map"] = iv;
    return j.dump();
}

} // namespace srheat
