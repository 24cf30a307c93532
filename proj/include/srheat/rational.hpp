#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace srheat {

// Exact rational scalar. All vector-field algebra (brackets, dilation
// pullbacks, graded decomposition, chart jets) is carried out over this type;
// doubles appear only at evaluation boundaries.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational rat(std::int64_t num, std::int64_t den = 1)
{
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    return Rational(num, den);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r)
{
    return r.str();
}

// Exact integer power, n >= 0.
inline Rational pow_rat(const Rational& base, unsigned n)
{
    Rational out(1);
    Rational b = base;
    while (n) {
        if (n & 1u) out *= b;
        b *= b;
        n >>= 1u;
    }
    return out;
}

} // namespace srheat
