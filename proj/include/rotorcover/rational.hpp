#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace rotorcover {

// Arbitrary-precision rational. Moment matrices of uniform (and any
// finite-decimal) rotor laws have entries of this form, so identities like
// 2M = D can be tested exactly instead of within a float tolerance.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational rat(long long num, long long den = 1) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    return Rational(num, den);
}

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }

// Parses an integer or decimal literal (optional exponent) into the exact
// rational value of the written text, e.g. "0.25" -> 1/4, "2e-1" -> 1/5.
Rational rational_from_literal(std::string_view text);

// Renders r as a finite decimal string. Throws std::invalid_argument if the
// reduced denominator has prime factors other than 2 and 5.
std::string decimal_string(const Rational& r);

std::string to_string(const Rational& r); // "3/5", "2", "-1/4"

} // namespace rotorcover
