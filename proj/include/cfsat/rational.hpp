#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace cfsat {

using Rational = mpq_class;
using Integer = mpz_class;

// Parses "12", "-0.125", "1.5e-3", "3/4" exactly. Throws ParseError.
Rational parse_rational(std::string_view text);

// Exact conversion of a binary double (every finite double is a dyadic rational).
Rational rational_from_double(double value);

// Finite decimal expansion when the denominator is 2^a 5^b, "p/q" otherwise.
// parse_rational(to_string(q)) == q for every q.
std::string to_string(const Rational& q);

double to_double(const Rational& q);

Integer floor(const Rational& q);
Integer ceil(const Rational& q);
bool is_integer(const Rational& q);

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

} // namespace cfsat
