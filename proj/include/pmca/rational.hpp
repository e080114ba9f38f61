#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace pmca {

/// Arbitrary-precision exact rational. All symbolic and estimator arithmetic uses this type.
using Rational = mpq_class;

/// Parses "3", "-3/4", "0.05", "1e-5", "2.5E-3" into an exact rational ("0.05" is exactly 1/20).
/// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// Canonical fraction text, e.g. "3/4", "-2", "0".
std::string to_fraction_string(const Rational& value);

/// Decimal rendering with the given number of significant digits ("%.6g" style).
std::string to_decimal_string(const Rational& value, int significant_digits = 6);

double to_double(const Rational& value);

/// Exact conversion of a finite double (every finite double is a dyadic rational).
Rational from_double(double value);

Rational pow(const Rational& base, unsigned long exponent);

inline bool is_zero(const Rational& value) { return sgn(value) == 0; }

}  // namespace pmca
