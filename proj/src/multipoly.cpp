#include "srheat/multipoly.hpp"

#include <algorithm>
#include <numeric>

namespace srheat {

MultiPoly::MultiPoly(int dim) : dim_(dim)
{
    if (dim < 1) throw std::invalid_argument("MultiPoly: dim must be positive");
}

MultiPoly MultiPoly::constant(int dim, const Rational& c)
{
    MultiPoly p(dim);
    if (c != 0) p.terms_[Exponent(dim, 0)] = c;
    return p;
}

MultiPoly MultiPoly::monomial(int dim, const Exponent& e, const Rational& c)
{
    if (static_cast<int>(e.size()) != dim)
        throw DimensionMismatch("MultiPoly::monomial: exponent length != dim");
    MultiPoly p(dim);
    if (c != 0) p.terms_[e] = c;
    return p;
}

MultiPoly MultiPoly::variable(int dim, int i)
{
    if (i < 0 || i >= dim) throw std::invalid_argument("MultiPoly::variable: index out of range");
    Exponent e(dim, 0);
    e[i] = 1;
    return monomial(dim, e, Rational(1));
}

Rational MultiPoly::coefficient(const Exponent& e) const
{
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
}

void MultiPoly::set_coefficient(const Exponent& e, const Rational& c)
{
    if (static_cast<int>(e.size()) != dim_)
        throw DimensionMismatch("MultiPoly::set_coefficient: exponent length != dim");
    if (c == 0)
        terms_.erase(e);
    else
        terms_[e] = c;
}

void MultiPoly::check_dim(const MultiPoly& o) const
{
    if (dim_ != o.dim_) throw DimensionMismatch("MultiPoly: dimension mismatch");
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o)
{
    check_dim(o);
    for (const auto& [e, c] : o.terms_) {
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            terms_.emplace(e, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }
    return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o)
{
    check_dim(o);
    for (const auto& [e, c] : o.terms_) {
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            terms_.emplace(e, -c);
        } else {
            it->second -= c;
            if (it->second == 0) terms_.erase(it);
        }
    }
    return *this;
}

MultiPoly MultiPoly::operator+(const MultiPoly& o) const
{
    MultiPoly r = *this;
    r += o;
    return r;
}

MultiPoly MultiPoly::operator-(const MultiPoly& o) const
{
    MultiPoly r = *this;
    r -= o;
    return r;
}

MultiPoly MultiPoly::operator*(const MultiPoly& o) const
{
    check_dim(o);
    MultiPoly r(dim_);
    for (const auto& [ea, ca] : terms_) {
        for (const auto& [eb, cb] : o.terms_) {
            Exponent e(dim_);
            for (int i = 0; i < dim_; ++i) e[i] = ea[i] + eb[i];
            auto it = r.terms_.find(e);
            if (it == r.terms_.end()) {
                r.terms_.emplace(std::move(e), ca * cb);
            } else {
                it->second += ca * cb;
                if (it->second == 0) r.terms_.erase(it);
            }
        }
    }
    return r;
}

MultiPoly MultiPoly::operator*(const Rational& c) const
{
    MultiPoly r(dim_);
    if (c == 0) return r;
    for (const auto& [e, v] : terms_) r.terms_.emplace(e, v * c);
    return r;
}

MultiPoly MultiPoly::operator-() const { return (*this) * Rational(-1); }

MultiPoly MultiPoly::derivative(int i) const
{
    if (i < 0 || i >= dim_) throw std::invalid_argument("MultiPoly::derivative: index out of range");
    MultiPoly r(dim_);
    for (const auto& [e, c] : terms_) {
        if (e[i] == 0) continue;
        Exponent d = e;
        d[i] -= 1;
        r.terms_[d] = c * Rational(e[i]);
    }
    return r;
}

Rational MultiPoly::eval(const std::vector<Rational>& x) const
{
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("MultiPoly::eval: point length != dim");
    Rational out(0);
    for (const auto& [e, c] : terms_) {
        Rational t = c;
        for (int i = 0; i < dim_; ++i)
            if (e[i]) t *= pow_rat(x[i], e[i]);
        out += t;
    }
    return out;
}

double MultiPoly::eval(const std::vector<double>& x) const
{
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("MultiPoly::eval: point length != dim");
    double out = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = to_double(c);
        for (int i = 0; i < dim_; ++i)
            for (std::uint32_t k = 0; k < e[i]; ++k) t *= x[i];
        out += t;
    }
    return out;
}

MultiPoly MultiPoly::compose(const std::vector<MultiPoly>& subs, int max_plain_degree) const
{
    if (static_cast<int>(subs.size()) != dim_)
        throw DimensionMismatch("MultiPoly::compose: wrong number of substitutions");
    const int out_dim = subs.empty() ? 1 : subs.front().dim();
    for (const auto& s : subs)
        if (s.dim() != out_dim) throw DimensionMismatch("MultiPoly::compose: inconsistent substitution dims");

    auto truncate = [&](MultiPoly& p) {
        if (max_plain_degree < 0) return;
        MultiPoly q(out_dim);
        for (const auto& [e, c] : p.terms()) {
            long deg = std::accumulate(e.begin(), e.end(), 0L);
            if (deg <= max_plain_degree) q.set_coefficient(e, c);
        }
        p = q;
    };

    MultiPoly out(out_dim);
    for (const auto& [e, c] : terms_) {
        MultiPoly term = MultiPoly::constant(out_dim, c);
        for (int i = 0; i < dim_; ++i) {
            for (std::uint32_t k = 0; k < e[i]; ++k) {
                term = term * subs[i];
                truncate(term);
                if (term.is_zero()) break;
            }
            if (term.is_zero()) break;
        }
        out += term;
    }
    return out;
}

long MultiPoly::weighted_degree(const Exponent& e, const std::vector<int>& w)
{
    long d = 0;
    for (std::size_t i = 0; i < e.size(); ++i) d += static_cast<long>(e[i]) * w[i];
    return d;
}

long MultiPoly::min_weighted_degree(const std::vector<int>& w) const
{
    if (terms_.empty()) return 0;
    long m = weighted_degree(terms_.begin()->first, w);
    for (const auto& [e, c] : terms_) m = std::min(m, weighted_degree(e, w));
    return m;
}

long MultiPoly::max_weighted_degree(const std::vector<int>& w) const
{
    long m = 0;
    for (const auto& [e, c] : terms_) m = std::max(m, weighted_degree(e, w));
    return m;
}

int MultiPoly::plain_degree() const
{
    int m = -1;
    for (const auto& [e, c] : terms_)
        m = std::max(m, static_cast<int>(std::accumulate(e.begin(), e.end(), 0L)));
    return m;
}

MultiPoly MultiPoly::truncate_weighted(const std::vector<int>& w, long bound) const
{
    MultiPoly r(dim_);
    for (const auto& [e, c] : terms_)
        if (weighted_degree(e, w) <= bound) r.terms_.emplace(e, c);
    return r;
}

MultiPoly MultiPoly::weighted_part(const std::vector<int>& w, long degree) const
{
    MultiPoly r(dim_);
    for (const auto& [e, c] : terms_)
        if (weighted_degree(e, w) == degree) r.terms_.emplace(e, c);
    return r;
}

MultiPoly MultiPoly::scale_variables(const std::vector<Rational>& s) const
{
    if (static_cast<int>(s.size()) != dim_)
        throw DimensionMismatch("MultiPoly::scale_variables: wrong scale length");
    MultiPoly r(dim_);
    for (const auto& [e, c] : terms_) {
        Rational cc = c;
        for (int i = 0; i < dim_; ++i)
            if (e[i]) cc *= pow_rat(s[i], e[i]);
        if (cc != 0) r.terms_.emplace(e, cc);
    }
    return r;
}

CompiledPoly::CompiledPoly(const MultiPoly& p) : dim_(p.dim())
{
    for (const auto& [e, c] : p.terms()) {
        coeffs_.push_back(to_double(c));
        for (int i = 0; i < dim_; ++i) exps_.push_back(e[i]);
    }
}

double CompiledPoly::eval(const double* x) const
{
    double out = 0.0;
    const std::uint32_t* ep = exps_.data();
    for (double c : coeffs_) {
        double t = c;
        for (int i = 0; i < dim_; ++i) {
            std::uint32_t k = ep[i];
            while (k--) t *= x[i];
        }
        out += t;
        ep += dim_;
    }
    return out;
}

} // namespace srheat
