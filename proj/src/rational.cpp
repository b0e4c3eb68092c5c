#include "rotorcover/rational.hpp"

#include <cctype>
#include <sstream>

namespace rotorcover {

Rational rational_from_literal(std::string_view text) {
    size_t i = 0;
    const size_t n = text.size();
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("bad numeric literal '" + std::string(text) + "': " + why);
    };
    if (n == 0) fail("empty");

    bool neg = false;
    if (text[i] == '+' || text[i] == '-') {
        neg = text[i] == '-';
        ++i;
    }

    BigInt mantissa = 0;
    long long frac_digits = 0;
    bool any_digit = false, seen_dot = false;
    for (; i < n && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.'); ++i) {
        if (text[i] == '.') {
            if (seen_dot) fail("two decimal points");
            seen_dot = true;
        } else {
            mantissa = mantissa * 10 + (text[i] - '0');
            if (seen_dot) ++frac_digits;
            any_digit = true;
        }
    }
    if (!any_digit) fail("no digits");

    long long exponent = 0;
    if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < n && (text[i] == '+' || text[i] == '-')) {
            eneg = text[i] == '-';
            ++i;
        }
        if (i == n) fail("empty exponent");
        for (; i < n; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) fail("bad exponent");
            exponent = exponent * 10 + (text[i] - '0');
            if (exponent > 100000) fail("exponent out of range");
        }
        if (eneg) exponent = -exponent;
    }
    if (i != n) fail("trailing characters");

    const long long net = exponent - frac_digits;
    BigInt num = neg ? BigInt(-mantissa) : mantissa;
    BigInt den = 1;
    if (net >= 0) {
        for (long long k = 0; k < net; ++k) num *= 10;
    } else {
        for (long long k = 0; k < -net; ++k) den *= 10;
    }
    return Rational(num, den);
}

std::string decimal_string(const Rational& r) {
    BigInt num = boost::multiprecision::numerator(r);
    BigInt den = boost::multiprecision::denominator(r);
    bool neg = num < 0;
    if (neg) num = -num;

    // Scale denominator to a power of ten: den must be 2^a * 5^b.
    BigInt d = den;
    long long twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d != 1)
        throw std::invalid_argument("rational " + to_string(r) + " has no finite decimal form");
    const long long digits = std::max(twos, fives);
    for (long long k = twos; k < digits; ++k) num *= 2;
    for (long long k = fives; k < digits; ++k) num *= 5;

    std::string s = num.str();
    while (static_cast<long long>(s.size()) <= digits) s.insert(s.begin(), '0');
    if (digits > 0) s.insert(s.end() - digits, '.');
    return (neg ? "-" : "") + s;
}

std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1)
        os << "/" << boost::multiprecision::denominator(r);
    return os.str();
}

} // namespace rotorcover
