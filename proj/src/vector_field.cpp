#include "srheat/vector_field.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace srheat {

using nlohmann::json;

Weights::Weights(std::vector<int> ww) : w(std::move(ww))
{
    if (w.empty()) throw std::invalid_argument("Weights: empty");
    int prev = 0;
    for (int wi : w) {
        if (wi < 1) throw std::invalid_argument("Weights: weights must be positive");
        if (wi < prev) throw std::invalid_argument("Weights: weights must be nondecreasing");
        prev = wi;
    }
}

int Weights::max() const { return *std::max_element(w.begin(), w.end()); }

long Weights::Q() const
{
    long q = 0;
    for (int wi : w) q += wi;
    return q;
}

PolyVectorField::PolyVectorField(int dim) : dim_(dim), comps_(dim, MultiPoly(dim))
{
    if (dim < 1) throw std::invalid_argument("PolyVectorField: dim must be positive");
}

PolyVectorField::PolyVectorField(std::vector<MultiPoly> components)
    : dim_(static_cast<int>(components.size())), comps_(std::move(components))
{
    if (dim_ < 1) throw std::invalid_argument("PolyVectorField: empty component list");
    for (const auto& c : comps_)
        if (c.dim() != dim_) throw DimensionMismatch("PolyVectorField: component dim mismatch");
}

PolyVectorField PolyVectorField::coordinate(int dim, int j)
{
    PolyVectorField X(dim);
    X.comps_[j] = MultiPoly::constant(dim, Rational(1));
    return X;
}

bool PolyVectorField::is_zero() const
{
    for (const auto& c : comps_)
        if (!c.is_zero()) return false;
    return true;
}

PolyVectorField PolyVectorField::operator+(const PolyVectorField& o) const
{
    if (dim_ != o.dim_) throw DimensionMismatch("PolyVectorField: dimension mismatch");
    PolyVectorField r(dim_);
    for (int j = 0; j < dim_; ++j) r.comps_[j] = comps_[j] + o.comps_[j];
    return r;
}

PolyVectorField PolyVectorField::operator-(const PolyVectorField& o) const
{
    if (dim_ != o.dim_) throw DimensionMismatch("PolyVectorField: dimension mismatch");
    PolyVectorField r(dim_);
    for (int j = 0; j < dim_; ++j) r.comps_[j] = comps_[j] - o.comps_[j];
    return r;
}

PolyVectorField PolyVectorField::operator*(const Rational& c) const
{
    PolyVectorField r(dim_);
    for (int j = 0; j < dim_; ++j) r.comps_[j] = comps_[j] * c;
    return r;
}

MultiPoly PolyVectorField::apply(const MultiPoly& f) const
{
    if (f.dim() != dim_) throw DimensionMismatch("PolyVectorField::apply: dimension mismatch");
    MultiPoly out(dim_);
    for (int j = 0; j < dim_; ++j) {
        if (comps_[j].is_zero()) continue;
        out += comps_[j] * f.derivative(j);
    }
    return out;
}

std::vector<Rational> PolyVectorField::evaluate(const std::vector<Rational>& point) const
{
    std::vector<Rational> out(dim_);
    for (int j = 0; j < dim_; ++j) out[j] = comps_[j].eval(point);
    return out;
}

std::vector<double> PolyVectorField::evaluate(const std::vector<double>& point) const
{
    std::vector<double> out(dim_);
    for (int j = 0; j < dim_; ++j) out[j] = comps_[j].eval(point);
    return out;
}

PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y)
{
    if (X.dim() != Y.dim()) throw DimensionMismatch("lie_bracket: dimension mismatch");
    const int n = X.dim();
    PolyVectorField r(n);
    // [X,Y]_j = X(Y_j) - Y(X_j)
    for (int j = 0; j < n; ++j)
        r.component(j) = X.apply(Y.component(j)) - Y.apply(X.component(j));
    return r;
}

PolyVectorField dilate_pullback(const PolyVectorField& X, const Weights& w,
                                const Rational& eps, int power)
{
    if (X.dim() != w.dim()) throw DimensionMismatch("dilate_pullback: weights dim mismatch");
    if (eps == 0)
        throw std::invalid_argument("dilate_pullback: eps must be nonzero (use graded_parts for the limit)");
    const int n = X.dim();
    std::vector<Rational> scale(n);
    for (int i = 0; i < n; ++i) scale[i] = pow_rat(eps, static_cast<unsigned>(w.w[i]));
    Rational eps_pow = power >= 0 ? pow_rat(eps, static_cast<unsigned>(power))
                                  : Rational(1) / pow_rat(eps, static_cast<unsigned>(-power));
    PolyVectorField r(n);
    for (int j = 0; j < n; ++j) {
        // eps^{power - w_j} * X_j(delta_eps x)
        MultiPoly c = X.component(j).scale_variables(scale);
        r.component(j) = c * (eps_pow / scale[j]);
    }
    return r;
}

std::map<long, PolyVectorField> graded_parts(const PolyVectorField& X, const Weights& w,
                                             long min_deg, long max_deg)
{
    if (X.dim() != w.dim()) throw DimensionMismatch("graded_parts: weights dim mismatch");
    const int n = X.dim();
    std::map<long, PolyVectorField> out;
    for (int j = 0; j < n; ++j) {
        for (const auto& [e, c] : X.component(j).terms()) {
            long deg = MultiPoly::weighted_degree(e, w.w) - w.w[j];
            if (deg < min_deg || deg > max_deg) continue;
            auto it = out.find(deg);
            if (it == out.end()) it = out.emplace(deg, PolyVectorField(n)).first;
            it->second.component(j).set_coefficient(e, c);
        }
    }
    return out;
}

CompiledField::CompiledField(const PolyVectorField& X) : dim_(X.dim())
{
    comps_.reserve(dim_);
    for (int j = 0; j < dim_; ++j) comps_.emplace_back(X.component(j));
}

void CompiledField::eval(const double* x, double* out) const
{
    for (int j = 0; j < dim_; ++j) out[j] = comps_[j].eval(x);
}

// --- JSON --------------------------------------------------------------------

static json poly_to_json_obj(const MultiPoly& p)
{
    json arr = json::array();
    for (const auto& [e, c] : p.terms()) {
        json term;
        term["exp"] = e;
        term["num"] = boost::multiprecision::numerator(c).str();
        term["den"] = boost::multiprecision::denominator(c).str();
        arr.push_back(std::move(term));
    }
    return arr;
}

static MultiPoly poly_from_json_obj(const json& arr, int dim)
{
    MultiPoly p(dim);
    for (const auto& term : arr) {
        Exponent e = term.at("exp").get<Exponent>();
        if (static_cast<int>(e.size()) != dim)
            throw DimensionMismatch("poly JSON: exponent length != dim");
        BigInt num, den;
        if (term.at("num").is_string())
            num = BigInt(term.at("num").get<std::string>());
        else
            num = BigInt(term.at("num").get<long long>());
        if (term.at("den").is_string())
            den = BigInt(term.at("den").get<std::string>());
        else
            den = BigInt(term.at("den").get<long long>());
        if (den == 0) throw std::invalid_argument("poly JSON: zero denominator");
        p += MultiPoly::monomial(dim, e, Rational(num, den));
    }
    return p;
}

std::string poly_to_json(const MultiPoly& p)
{
    json j;
    j["dim"] = p.dim();
    j["terms"] = poly_to_json_obj(p);
    return j.dump();
}

MultiPoly poly_from_json(const std::string& text)
{
    json j = json::parse(text);
    return poly_from_json_obj(j.at("terms"), j.at("dim").get<int>());
}

std::string to_json(const PolyVectorField& X)
{
    json j;
    j["dim"] = X.dim();
    json comps = json::array();
    for (int k = 0; k < X.dim(); ++k) comps.push_back(poly_to_json_obj(X.component(k)));
    j["components"] = std::move(comps);
    return j.dump();
}

PolyVectorField field_from_json(const std::string& text)
{
    json j = json::parse(text);
    const int dim = j.at("dim").get<int>();
    const auto& comps = j.at("components");
    if (static_cast<int>(comps.size()) != dim)
        throw DimensionMismatch("field JSON: component count != dim");
    std::vector<MultiPoly> c;
    c.reserve(dim);
    for (const auto& arr : comps) c.push_back(poly_from_json_obj(arr, dim));
    return PolyVectorField(std::move(c));
}

} // namespace srheat
