#include "srheat/nilpotent.hpp"

#include <nlohmann/json.hpp>
#include <Eigen/Dense>

#include <cmath>

namespace srheat {

using nlohmann::json;

double CutoffSpec::chi_of_norm(double s) const
{
    if (s <= R1) return 1.0;
    if (s >= R2) return 0.0;
    auto bump = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
    double u = (s - R1) / (R2 - R1);
    double b0 = bump(1.0 - u), b1 = bump(u);
    return b0 / (b0 + b1);
}

double CutoffSpec::chi(const std::vector<double>& x, const Weights& w) const
{
    return chi_of_norm(sr_pseudo_norm(x, w));
}

NilpotentStructure nilpotentize(const std::vector<PolyVectorField>& fields,
                                const std::optional<PolyVectorField>& drift,
                                const PrivilegedChart& chart, bool drift_in_D2,
                                const MultiPoly& density)
{
    NilpotentStructure S;
    S.dim = chart.dim();
    S.weights = chart.weights;
    S.r = chart.weights.max();

    for (std::size_t i = 0; i < fields.size(); ++i) {
        PolyVectorField pushed = push_field(chart, fields[i]);
        auto parts = graded_parts(pushed, chart.weights, -S.r, 0);
        auto it = parts.find(-1);
        if (it == parts.end())
            throw EmptyLowestPart("field " + std::to_string(i + 1) +
                                  " has no degree-(-1) part (not a section of D at the point)");
        // a generator of D has no parts below -1 (graded_parts omits zero parts)
        for (const auto& [deg, part] : parts)
            if (deg < -1) throw EmptyLowestPart("field has parts of degree < -1");
        S.hat_fields.push_back(it->second);
    }

    if (drift) {
        PolyVectorField pushed = push_field(chart, *drift);
        const long want = drift_in_D2 ? -2 : -1;
        auto parts = graded_parts(pushed, chart.weights, want, want);
        auto it = parts.find(want);
        if (it == parts.end())
            throw EmptyLowestPart("drift has no degree-(" + std::to_string(want) + ") part");
        S.hat_drift = it->second;
        S.drift_degree = static_cast<int>(want);
    }

    // measure constant: h(q) * |det DF(0)| (chart Jacobian at the origin)
    Rational hq = nilpotentize_measure(density, chart.base_point);
    const int n = S.dim;
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
        Exponent e(n, 0);
        for (int i = 0; i < n; ++i) {
            e[i] = 1;
            J(j, i) = to_double(chart.forward_map[j].coefficient(e));
            e[i] = 0;
        }
    }
    S.measure_constant = to_double(hq) * std::abs(J.determinant());

    // invariant: each hat component coefficient has weighted degree exactly w_j - 1
    for (const auto& hat : S.hat_fields) {
        for (int j = 0; j < n; ++j) {
            const auto& comp = hat.component(j);
            if (comp.is_zero()) continue;
            if (comp.min_weighted_degree(S.weights.w) != S.weights.w[j] - 1 ||
                comp.max_weighted_degree(S.weights.w) != S.weights.w[j] - 1)
                throw std::logic_error("nilpotentize: hat field not homogeneous of degree -1");
        }
    }
    return S;
}

Rational nilpotentize_measure(const MultiPoly& density, const std::vector<Rational>& point)
{
    Rational h = density.eval(point);
    if (h <= 0) throw NonpositiveDensity("measure density is not positive at the point");
    return h;
}

DivergenceReport check_divergence_free(const NilpotentStructure& S)
{
    DivergenceReport rep;
    rep.divergence_free = true;
    for (const auto& hat : S.hat_fields) {
        MultiPoly div(S.dim);
        for (int j = 0; j < S.dim; ++j) div += hat.component(j).derivative(j);
        if (!div.is_zero()) rep.divergence_free = false;
        rep.residuals.push_back(std::move(div));
    }
    return rep;
}

MultiPoly hat_operator_apply(const NilpotentStructure& S, const MultiPoly& f)
{
    MultiPoly out(S.dim);
    for (const auto& hat : S.hat_fields) out += hat.apply(hat.apply(f));
    if (S.hat_drift) out += S.hat_drift->apply(f);
    return out;
}

DampedField::DampedField(const PolyVectorField& pushed_field, const PolyVectorField& hat,
                         const Weights& w, double gamma, double eps, CutoffSpec cutoff)
    : w_(w), gamma_(gamma), eps_(eps), cutoff_(std::move(cutoff)), dim_(pushed_field.dim())
{
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("DampedField: gamma must be in (0,1)");
    if (eps == 0.0) throw std::invalid_argument("DampedField: eps must be nonzero");
    // Y^eps = eps * delta_eps^* X (exact at a dyadic-rational eps when possible;
    // otherwise nearest rational at 2^-48 resolution)
    const double snap = 281474976710656.0;  // 2^48
    Rational eps_rat(static_cast<long long>(std::llround(eps * snap)),
                     static_cast<long long>(snap));
    if (eps_rat == 0) throw std::invalid_argument("DampedField: eps below rational resolution");
    PolyVectorField Yeps = dilate_pullback(pushed_field, w, eps_rat, 1);
    hat_ = CompiledField(hat);
    correction_ = CompiledField(Yeps - hat);
}

std::vector<double> DampedField::evaluate(const std::vector<double>& x) const
{
    std::vector<double> out(dim_), corr(dim_);
    hat_.eval(x.data(), out.data());
    double s = std::pow(std::abs(eps_), gamma_) * sr_pseudo_norm(x, w_);
    double c = cutoff_.chi_of_norm(s);
    if (c != 0.0) {
        correction_.eval(x.data(), corr.data());
        for (int j = 0; j < dim_; ++j) out[j] += c * corr[j];
    }
    return out;
}

std::vector<double> DampedField::evaluate_hat(const std::vector<double>& x) const
{
    std::vector<double> out(dim_);
    hat_.eval(x.data(), out.data());
    return out;
}

double DampedField::sup_deviation(const std::vector<std::vector<double>>& samples) const
{
    const double scale = std::pow(std::abs(eps_), -gamma_);
    double sup = 0.0;
    std::vector<double> corr(dim_);
    for (const auto& u : samples) {
        std::vector<double> x = dilate(u, w_, scale);
        double s = std::pow(std::abs(eps_), gamma_) * sr_pseudo_norm(x, w_);
        double c = cutoff_.chi_of_norm(s);
        if (c == 0.0) continue;
        correction_.eval(x.data(), corr.data());
        double norm2 = 0.0;
        for (int j = 0; j < dim_; ++j) norm2 += c * corr[j] * c * corr[j];
        sup = std::max(sup, std::sqrt(norm2));
    }
    return sup;
}

DampedField damped_field(const PolyVectorField& pushed_field, const NilpotentStructure& S,
                         double gamma, double eps, const CutoffSpec& cutoff)
{
    // locate the hat of this field: degree-(-1) part
    auto parts = graded_parts(pushed_field, S.weights, -1, -1);
    auto it = parts.find(-1);
    if (it == parts.end()) throw EmptyLowestPart("damped_field: no degree-(-1) part");
    return DampedField(pushed_field, it->second, S.weights, gamma, eps, cutoff);
}

RateFit damping_rate_fit(const PolyVectorField& pushed_field, const NilpotentStructure& S,
                         double gamma, const std::vector<double>& eps_grid,
                         const std::vector<std::vector<double>>& samples,
                         const CutoffSpec& cutoff)
{
    if (eps_grid.size() < 4) throw std::invalid_argument("damping_rate_fit: need >= 4 eps values");
    double lo = std::abs(eps_grid.front()), hi = lo;
    for (double e : eps_grid) {
        lo = std::min(lo, std::abs(e));
        hi = std::max(hi, std::abs(e));
    }
    if (hi / lo < 1.0e4) throw std::invalid_argument("damping_rate_fit: eps grid must span >= 4 decades");

    RateFit fit;
    for (double e : eps_grid) {
        DampedField Y = damped_field(pushed_field, S, gamma, e, cutoff);
        double sup = Y.sup_deviation(samples);
        fit.eps_values.push_back(e);
        fit.sup_errors.push_back(sup);
    }
    // least squares on (log|eps|, log sup)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < fit.eps_values.size(); ++i) {
        if (fit.sup_errors[i] <= 0.0) continue;  // exactly homogeneous field
        double X = std::log(std::abs(fit.eps_values[i]));
        double Y = std::log(fit.sup_errors[i]);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
        ++m;
    }
    if (m < 2) {
        fit.exponent = std::numeric_limits<double>::infinity();  // deviation identically zero
        fit.residual = 0.0;
        return fit;
    }
    double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw std::invalid_argument("damping_rate_fit: degenerate grid");
    fit.exponent = (m * sxy - sx * sy) / denom;
    double icpt = (sy - fit.exponent * sx) / m;
    double ss = 0;
    for (std::size_t i = 0; i < fit.eps_values.size(); ++i) {
        if (fit.sup_errors[i] <= 0.0) continue;
        double X = std::log(std::abs(fit.eps_values[i]));
        double Y = std::log(fit.sup_errors[i]);
        double r = Y - (icpt + fit.exponent * X);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / m);
    return fit;
}

CoercivityReport hormander_coercivity(const std::vector<PolyVectorField>& frame, int r,
                                      const std::vector<std::vector<double>>& grid)
{
    if (frame.empty()) throw std::invalid_argument("hormander_coercivity: empty frame");
    const int n = frame.front().dim();
    CoercivityReport rep;
    rep.c = std::numeric_limits<double>::infinity();
    std::vector<CompiledField> comp;
    for (const auto& f : frame) comp.emplace_back(f);

    Eigen::MatrixXd P(n, static_cast<int>(frame.size()));
    std::vector<double> col(n);
    for (const auto& x : grid) {
        for (std::size_t i = 0; i < comp.size(); ++i) {
            comp[i].eval(x.data(), col.data());
            for (int j = 0; j < n; ++j) P(j, static_cast<int>(i)) = col[j];
        }
        Eigen::MatrixXd M = P * P.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        double lmin = es.eigenvalues().minCoeff();
        if (lmin < 0.0) lmin = 0.0;
        double xs = 0.0;
        for (double xi : x) xs += xi * xi;
        double weight = std::pow(1.0 + xs, r);
        double cx = weight * lmin;
        if (cx < rep.c) {
            rep.c = cx;
            rep.argmin = x;
        }
    }
    if (!std::isfinite(rep.c)) rep.c = 0.0;
    return rep;
}

std::vector<std::vector<double>> sr_ball_samples(const Weights& w, double radius, int count)
{
    // Halton sequence in [-1,1]^n mapped by u_i -> sign(u_i)*|u_i|, then scaled
    // anisotropically so ||x||_sR <= radius; rejection keeps the ball exact.
    static const int primes[] = {2, 3, 5, 7, 11, 13};
    const int n = w.dim();
    auto halton = [](int index, int base) {
        double f = 1.0, r = 0.0;
        while (index > 0) {
            f /= base;
            r += f * (index % base);
            index /= base;
        }
        return r;
    };
    std::vector<std::vector<double>> out;
    out.reserve(count);
    int idx = 1;
    while (static_cast<int>(out.size()) < count) {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) {
            double u = 2.0 * halton(idx, primes[i % 6]) - 1.0;
            // per-axis extent radius^{w_i}
            double ext = std::pow(radius, w.w[i]);
            x[i] = u * ext;
        }
        ++idx;
        if (sr_pseudo_norm(x, w) <= radius) out.push_back(std::move(x));
        if (idx > 1000 * count) break;  // pathological radius
    }
    return out;
}

std::string nilpotent_to_json(const NilpotentStructure& S)
{
    json j;
    j["dim"] = S.dim;
    j["weights"] = S.weights.w;
    j["r"] = S.r;
    j["measure_constant"] = S.measure_constant;
    json hats = json::array();
    for (const auto& h : S.hat_fields) hats.push_back(json::parse(to_json(h)));
    j["hat_fields"] = hats;
    if (S.hat_drift) {
        j["hat_drift"] = json::parse(to_json(*S.hat_drift));
        j["drift_degree"] = S.drift_degree;
    }
    return j.dump();
}

} // namespace srheat
