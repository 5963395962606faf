#include "entform/enclosure.hpp"

#include <stdexcept>

namespace entform {

Enclosure enclose_root(const Root& r, const Rational& width) {
    auto [lo, hi] = r.enclose(width > 0 ? width : Rational(1, 1000000));
    return Enclosure(std::move(lo), std::move(hi));
}

Enclosure sum_enclosure(const std::vector<Root>& terms, const Rational& width) {
    if (width <= 0) throw std::domain_error("sum_enclosure: width must be positive");
    size_t inexact = 0;
    for (const auto& t : terms) {
        if (!t.as_rational()) ++inexact;
    }
    Rational lo(0), hi(0);
    const Rational per_term = inexact == 0 ? width : width / Rational(static_cast<long>(inexact));
    for (const auto& t : terms) {
        if (auto exact = t.as_rational()) {
            lo += *exact;
            hi += *exact;
        } else {
            auto [tlo, thi] = t.enclose(per_term);
            lo += tlo;
            hi += thi;
        }
    }
    return Enclosure(std::move(lo), std::move(hi));
}

Enclosure operator+(const Enclosure& a, const Enclosure& b) { return {a.lo + b.lo, a.hi + b.hi}; }

Enclosure operator*(const Rational& c, const Enclosure& a) {
    if (c < 0) throw std::domain_error("Enclosure scale: negative factor");
    return {c * a.lo, c * a.hi};
}

Enclosure mul_nonneg(const Enclosure& a, const Enclosure& b) {
    if (a.lo < 0 || b.lo < 0) throw std::domain_error("mul_nonneg: negative operand");
    return {a.lo * b.lo, a.hi * b.hi};
}

Enclosure div_pos(const Enclosure& a, const Enclosure& b) {
    if (a.lo < 0 || b.lo <= 0) throw std::domain_error("div_pos: operands out of range");
    return {a.lo / b.hi, a.hi / b.lo};
}

Enclosure pow_nonneg(const Enclosure& a, const Rational& e, const Rational& width) {
    if (a.lo < 0) throw std::domain_error("pow_nonneg: negative operand");
    if (e == 0) return Enclosure(Rational(1));
    if (e < 0) {
        if (a.lo == 0) throw std::domain_error("pow_nonneg: negative exponent at zero");
        Enclosure inv(Rational(1) / a.hi, Rational(1) / a.lo);
        return pow_nonneg(inv, -e, width);
    }
    const Rational half_width = width / 2;
    auto [llo, lhi] = a.lo == 0 ? std::pair<Rational, Rational>{Rational(0), Rational(0)}
                                : Root::pow(a.lo, e).enclose(half_width);
    auto [hlo, hhi] = Root::pow(a.hi, e).enclose(half_width);
    return {std::move(llo), std::move(hhi)};
}

Certified certified_le(const Enclosure& a, const Enclosure& b) {
    if (a.hi <= b.lo) return Certified::True;
    if (a.lo > b.hi) return Certified::False;
    return Certified::Undecided;
}

std::string to_string(const Enclosure& e, int digits) {
    if (e.is_exact()) return fraction_string(e.lo) + " (= " + decimal_string(e.lo, digits) + ")";
    return "[" + decimal_string(e.lo, digits) + ", " + decimal_string(e.hi, digits) + "]";
}

}  // namespace entform
