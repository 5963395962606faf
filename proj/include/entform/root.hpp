#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "entform/rational.hpp"

namespace entform {

// base^(1/index) for a nonnegative rational base and positive integer index.
// Comparisons are decided exactly by integer cross-powering; no floating point.
// Perfect powers are normalized away, so Root(4,2) stores base 2, index 1.
class Root {
  public:
    Root() : base_(0), index_(1) {}
    explicit Root(Rational value) : base_(std::move(value)), index_(1) { check_nonnegative(); }
    Root(Rational base, unsigned long index);

    // x^(num/den) with den > 0; x > 0, or x == 0 with a positive exponent.
    static Root pow(const Rational& x, const Rational& exponent);

    const Rational& base() const { return base_; }
    unsigned long index() const { return index_; }

    bool is_zero() const { return base_ == 0; }
    // Present iff the value is rational (index normalized to 1).
    std::optional<Rational> as_rational() const;

    Root pow(const Rational& exponent) const;
    Root inverse() const;

    friend Root operator*(const Root& a, const Root& b);
    friend Root operator*(const Rational& c, const Root& a);
    friend Root operator/(const Root& a, const Root& b);

    std::strong_ordering compare(const Root& other) const;
    std::strong_ordering compare(const Rational& other) const;

    bool operator==(const Root& other) const { return compare(other) == std::strong_ordering::equal; }
    bool operator<(const Root& other) const { return compare(other) == std::strong_ordering::less; }
    bool operator<=(const Root& other) const { return compare(other) != std::strong_ordering::greater; }

    // Certified rational bounds lo <= value <= hi with hi - lo <= width (width > 0
    // unless the value is exactly rational). Directed rounding via integer roots.
    std::pair<Rational, Rational> enclose(const Rational& width) const;

    std::string to_string() const;

  private:
    void check_nonnegative() const;
    void normalize();

    Rational base_;
    unsigned long index_;
};

inline std::strong_ordering root_compare(const Root& a, const Root& b) { return a.compare(b); }

}  // namespace entform
