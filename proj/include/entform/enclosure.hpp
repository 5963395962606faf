#pragma once

#include <vector>

#include "entform/rational.hpp"
#include "entform/root.hpp"

namespace entform {

// Certified interval [lo, hi] containing a real value.
struct Enclosure {
    Rational lo;
    Rational hi;

    Enclosure() : lo(0), hi(0) {}
    explicit Enclosure(Rational exact) : lo(exact), hi(std::move(exact)) {}
    Enclosure(Rational lower, Rational upper) : lo(std::move(lower)), hi(std::move(upper)) {}

    Rational width() const { return hi - lo; }
    bool is_exact() const { return lo == hi; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
};

// Certified enclosure of sum(terms) with width <= `width` (exact terms cost nothing).
Enclosure sum_enclosure(const std::vector<Root>& terms, const Rational& width);

Enclosure enclose_root(const Root& r, const Rational& width);

Enclosure operator+(const Enclosure& a, const Enclosure& b);
Enclosure operator*(const Rational& c, const Enclosure& a);  // c >= 0
// Both operands nonnegative.
Enclosure mul_nonneg(const Enclosure& a, const Enclosure& b);
// a / b with b.lo > 0, a nonnegative.
Enclosure div_pos(const Enclosure& a, const Enclosure& b);
// a^e for nonnegative a; refines to `width` when the exponent is fractional.
Enclosure pow_nonneg(const Enclosure& a, const Rational& e, const Rational& width);

enum class Certified { True, False, Undecided };

// Is a <= b certifiable from the enclosures alone?
Certified certified_le(const Enclosure& a, const Enclosure& b);

std::string to_string(const Enclosure& e, int digits = 9);

}  // namespace entform
