#include "entform/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace entform {

Rational pow_rat(const Rational& x, long e) {
    if (e == 0) return Rational(1);
    if (x == 0) {
        if (e < 0) throw std::domain_error("pow_rat: 0 to a negative power");
        return Rational(0);
    }
    const unsigned long mag = e < 0 ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
    Rational out;
    mpz_pow_ui(out.get_num_mpz_t(), x.get_num_mpz_t(), mag);
    mpz_pow_ui(out.get_den_mpz_t(), x.get_den_mpz_t(), mag);
    if (e < 0) {
        mpq_inv(out.get_mpq_t(), out.get_mpq_t());
    }
    out.canonicalize();
    return out;
}

Integer pow_int(const Integer& x, unsigned long e) {
    Integer out;
    mpz_pow_ui(out.get_mpz_t(), x.get_mpz_t(), e);
    return out;
}

std::string fraction_string(const Rational& x) {
    if (x.get_den() == 1) return x.get_num().get_str();
    return x.get_num().get_str() + "/" + x.get_den().get_str();
}

std::string decimal_string(const Rational& x, int digits) {
    if (digits < 0) digits = 0;
    const bool negative = x < 0;
    Rational mag = abs_rat(x);
    Integer scale = pow_int(Integer(10), static_cast<unsigned long>(digits));
    Integer scaled_floor;
    {
        Rational scaled = mag * Rational(scale);
        mpz_fdiv_q(scaled_floor.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    }
    const bool exact = mag * Rational(scale) == Rational(scaled_floor);
    Integer whole = scaled_floor / scale;
    Integer frac = scaled_floor - whole * scale;
    std::string out = negative && (scaled_floor != 0 || !exact) ? "-" : "";
    out += whole.get_str();
    if (digits > 0) {
        std::string f = frac.get_str();
        out += "." + std::string(static_cast<size_t>(digits) - f.size(), '0') + f;
    }
    if (!exact) out += "…";
    return out;
}

std::optional<Rational> parse_rational(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto slash = s.find('/');
    const auto dot = s.find('.');
    try {
        if (slash != std::string::npos) {
            Rational q;
            if (mpq_set_str(q.get_mpq_t(), s.c_str(), 10) != 0) return std::nullopt;
            if (q.get_den() == 0) return std::nullopt;
            q.canonicalize();
            return q;
        }
        if (dot != std::string::npos) {
            std::string digitsonly = s.substr(0, dot) + s.substr(dot + 1);
            if (digitsonly.empty() || digitsonly == "-" || digitsonly == "+") return std::nullopt;
            for (size_t i = 0; i < digitsonly.size(); ++i) {
                if (i == 0 && (digitsonly[i] == '-' || digitsonly[i] == '+')) continue;
                if (!std::isdigit(static_cast<unsigned char>(digitsonly[i]))) return std::nullopt;
            }
            Integer num(digitsonly, 10);
            Integer den = pow_int(Integer(10), s.size() - dot - 1);
            Rational q(num, den);
            q.canonicalize();
            return q;
        }
        Integer n(s, 10);
        return Rational(n);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

}  // namespace entform
