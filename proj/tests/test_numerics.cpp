#include "doctest.h"

#include "entform/enclosure.hpp"
#include "entform/rational.hpp"
#include "entform/root.hpp"
#include "support.hpp"

using namespace entform;

TEST_CASE("rational helpers") {
    CHECK(pow_rat(rat(2, 3), 3) == rat(8, 27));
    CHECK(pow_rat(rat(2, 3), -2) == rat(9, 4));
    CHECK(pow_rat(rat(5), 0) == 1);
    CHECK(fraction_string(rat(-3, 6)) == "-1/2");
    CHECK(fraction_string(rat(4, 2)) == "2");
    CHECK(*parse_rational("7/4") == rat(7, 4));
    CHECK(*parse_rational("-12") == rat(-12));
    CHECK(*parse_rational("1.25") == rat(5, 4));
    CHECK(!parse_rational("1/0"));
    CHECK(!parse_rational("abc"));
    CHECK(decimal_string(rat(1, 2), 3) == "0.500");
    CHECK(decimal_string(rat(1, 3), 3) == "0.333…");
}

TEST_CASE("root comparisons are exact") {
    // 2^(1/2) vs 3^(1/3): cross-powers 8 vs 9
    CHECK(root_compare(Root(rat(2), 2), Root(rat(3), 3)) == std::strong_ordering::less);
    CHECK(root_compare(Root(rat(2), 2), Root(rat(2), 2)) == std::strong_ordering::equal);
    // perfect power collapses
    Root four_sqrt(rat(4), 2);
    CHECK(four_sqrt.index() == 1);
    CHECK(four_sqrt.as_rational().value() == 2);
    CHECK(four_sqrt.compare(rat(2)) == std::strong_ordering::equal);
}

TEST_CASE("root arithmetic") {
    Root sqrt2(rat(2), 2);
    CHECK((sqrt2 * sqrt2).as_rational().value() == 2);
    CHECK(Root::pow(rat(8), rat(2, 3)).as_rational().value() == 4);
    CHECK(Root::pow(rat(1, 4), rat(-1, 2)).as_rational().value() == 2);
    CHECK(sqrt2.inverse() == Root(rat(1, 2), 2));
    CHECK((rat(3) * sqrt2) == Root(rat(18), 2));
    CHECK(sqrt2.pow(rat(4)).as_rational().value() == 4);
    // mixed indices: 2^(1/2) * 2^(1/3) = 2^(5/6)
    CHECK((sqrt2 * Root(rat(2), 3)) == Root(rat(32), 6));
}

TEST_CASE("root enclosure is certified") {
    Root sqrt2(rat(2), 2);
    const Rational width = rat(1, 1000000);
    auto [lo, hi] = sqrt2.enclose(width);
    CHECK(hi - lo <= width);
    CHECK(lo * lo <= 2);
    CHECK(hi * hi >= 2);

    // Independent oracle: plain bisection on x^2 = 2.
    Rational blo(1), bhi(2);
    for (int i = 0; i < 30; ++i) {
        Rational mid = (blo + bhi) / 2;
        if (mid * mid <= 2) {
            blo = mid;
        } else {
            bhi = mid;
        }
    }
    CHECK(lo <= bhi);
    CHECK(blo <= hi);
}

TEST_CASE("sum_enclosure") {
    // exact roots sum exactly
    Enclosure e = sum_enclosure({Root(rat(4), 2), Root(rat(9), 2)}, rat(1, 10));
    CHECK(e.is_exact());
    CHECK(e.lo == 5);

    Enclosure just_sqrt2 = sum_enclosure({Root(rat(2), 2)}, rat(1, 1000000));
    CHECK(just_sqrt2.width() <= rat(1, 1000000));
    CHECK(just_sqrt2.lo * just_sqrt2.lo <= 2);
    CHECK(just_sqrt2.hi * just_sqrt2.hi >= 2);

    Enclosure empty = sum_enclosure({}, rat(1, 10));
    CHECK(empty.lo == 0);
    CHECK(empty.hi == 0);
}

TEST_CASE("enclosures shrink monotonically under refinement") {
    testing::Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        Root r(rng.nonneg_rational(50, 20), static_cast<unsigned long>(rng.uniform(1, 5)));
        Rational w1(1, rng.uniform(2, 1000));
        Rational w2 = w1 / rng.uniform(2, 50);
        auto [lo1, hi1] = r.enclose(w1);
        auto [lo2, hi2] = r.enclose(w2);
        CHECK(lo1 <= lo2);
        CHECK(hi2 <= hi1);
        CHECK(hi2 - lo2 <= w2);
    }
}

TEST_CASE("enclosure arithmetic and certification") {
    Enclosure a(rat(1), rat(2));
    Enclosure b(rat(3), rat(4));
    CHECK((a + b).lo == 4);
    CHECK((a + b).hi == 6);
    CHECK(mul_nonneg(a, b).lo == 3);
    CHECK(mul_nonneg(a, b).hi == 8);
    CHECK(div_pos(a, b).lo == rat(1, 4));
    CHECK(div_pos(a, b).hi == rat(2, 3));
    CHECK(certified_le(a, b) == Certified::True);
    CHECK(certified_le(b, a) == Certified::False);
    CHECK(certified_le(a, Enclosure(rat(3, 2), rat(5))) == Certified::Undecided);

    Enclosure p = pow_nonneg(Enclosure(rat(4), rat(4)), rat(1, 2), rat(1, 1000));
    CHECK(p.contains(rat(2)));
    CHECK(p.width() <= rat(1, 1000));
}
