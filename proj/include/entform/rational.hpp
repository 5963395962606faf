#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace entform {

// Exact arbitrary-precision rational, kept in canonical reduced form by GMP.
using Rational = mpq_class;
using Integer = mpz_class;

inline Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

// x^e for integer e (e < 0 requires x != 0).
Rational pow_rat(const Rational& x, long e);

Integer pow_int(const Integer& x, unsigned long e);

inline Rational abs_rat(const Rational& x) { return x < 0 ? Rational(-x) : x; }

inline bool is_integer(const Rational& x) { return x.get_den() == 1; }

// "num/den", or just "num" when den == 1.
std::string fraction_string(const Rational& x);

// Decimal approximation with `digits` fractional digits, truncated toward zero,
// suffixed with "…" when inexact.
std::string decimal_string(const Rational& x, int digits = 6);

// Accepts "a/b", integer strings, and plain decimals ("-1.25").
std::optional<Rational> parse_rational(const std::string& s);

}  // namespace entform
