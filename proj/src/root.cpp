#include "entform/root.hpp"

#include <numeric>
#include <stdexcept>

namespace entform {

namespace {

// Exact d-th root if one exists.
std::optional<Integer> exact_root(const Integer& x, unsigned long d) {
    if (x == 0) return Integer(0);
    if (x == 1) return Integer(1);
    Integer r;
    const int exact = mpz_root(r.get_mpz_t(), x.get_mpz_t(), d);
    if (exact != 0) return r;
    return std::nullopt;
}

long checked_quotient(unsigned long num, unsigned long den) {
    return static_cast<long>(num / den);
}

}  // namespace

Root::Root(Rational base, unsigned long index) : base_(std::move(base)), index_(index) {
    if (index_ == 0) throw std::domain_error("Root: index must be positive");
    check_nonnegative();
    normalize();
}

void Root::check_nonnegative() const {
    if (base_ < 0) throw std::domain_error("Root: negative base");
}

void Root::normalize() {
    if (base_ == 0 || base_ == 1) {
        index_ = 1;
        return;
    }
    bool reduced = true;
    while (reduced && index_ > 1) {
        reduced = false;
        for (unsigned long d = index_; d >= 2; --d) {
            if (index_ % d != 0) continue;
            auto num = exact_root(base_.get_num(), d);
            if (!num) continue;
            auto den = exact_root(base_.get_den(), d);
            if (!den) continue;
            base_ = Rational(*num, *den);
            base_.canonicalize();
            index_ /= d;
            reduced = true;
            break;
        }
    }
}

Root Root::pow(const Rational& x, const Rational& exponent) {
    if (x < 0) throw std::domain_error("Root::pow: negative base");
    const long num = static_cast<long>(exponent.get_num().get_si());
    const unsigned long den = exponent.get_den().get_ui();
    if (x == 0) {
        if (exponent <= 0) throw std::domain_error("Root::pow: 0 to a nonpositive power");
        return Root(Rational(0));
    }
    return Root(pow_rat(x, num), den);
}

std::optional<Rational> Root::as_rational() const {
    if (index_ == 1) return base_;
    return std::nullopt;
}

Root Root::pow(const Rational& exponent) const {
    if (exponent == 0) return Root(Rational(1));
    if (base_ == 0) {
        if (exponent < 0) throw std::domain_error("Root::pow: 0 to a negative power");
        return Root(Rational(0));
    }
    const long num = static_cast<long>(exponent.get_num().get_si());
    const unsigned long den = exponent.get_den().get_ui();
    return Root(pow_rat(base_, num), den * index_);
}

Root Root::inverse() const {
    if (base_ == 0) throw std::domain_error("Root::inverse: zero value");
    return Root(Rational(1) / base_, index_);
}

Root operator*(const Root& a, const Root& b) {
    if (a.base_ == 0 || b.base_ == 0) return Root(Rational(0));
    const unsigned long l = std::lcm(a.index_, b.index_);
    Rational combined = pow_rat(a.base_, checked_quotient(l, a.index_)) *
                        pow_rat(b.base_, checked_quotient(l, b.index_));
    return Root(std::move(combined), l);
}

Root operator*(const Rational& c, const Root& a) {
    if (c < 0) throw std::domain_error("Root: negative scalar");
    return Root(c) * a;
}

Root operator/(const Root& a, const Root& b) { return a * b.inverse(); }

std::strong_ordering Root::compare(const Root& other) const {
    const unsigned long l = std::lcm(index_, other.index_);
    const Rational lhs = pow_rat(base_, checked_quotient(l, index_));
    const Rational rhs = pow_rat(other.base_, checked_quotient(l, other.index_));
    const int c = cmp(lhs, rhs);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::strong_ordering Root::compare(const Rational& other) const {
    if (other < 0) return std::strong_ordering::greater;
    return compare(Root(other));
}

std::pair<Rational, Rational> Root::enclose(const Rational& width) const {
    if (index_ == 1) return {base_, base_};
    if (width <= 0) throw std::domain_error("Root::enclose: width must be positive");
    // Smallest s with 2^-s <= width.
    unsigned long s = 0;
    Rational pw(1);
    while (pw * width < 1) {
        pw *= 2;
        ++s;
    }
    // base = a/b; value·b·2^s = (a·b^(q-1)·2^(qs))^(1/q).
    Integer scaled = base_.get_num() * pow_int(base_.get_den(), index_ - 1);
    Integer two_pow;
    mpz_ui_pow_ui(two_pow.get_mpz_t(), 2, index_ * s);
    scaled *= two_pow;
    Integer t;
    const int exact = mpz_root(t.get_mpz_t(), scaled.get_mpz_t(), index_);
    Integer denom = base_.get_den();
    mpz_ui_pow_ui(two_pow.get_mpz_t(), 2, s);
    denom *= two_pow;
    Rational lo(t, denom);
    lo.canonicalize();
    if (exact != 0) return {lo, lo};
    Rational hi(t + 1, denom);
    hi.canonicalize();
    return {lo, hi};
}

std::string Root::to_string() const {
    if (index_ == 1) return fraction_string(base_);
    return "(" + fraction_string(base_) + ")^(1/" + std::to_string(index_) + ")";
}

}  // namespace entform
