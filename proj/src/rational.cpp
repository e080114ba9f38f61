#include "pmca/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pmca {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

[[noreturn]] void bad(std::string_view text) {
    throw std::invalid_argument("malformed rational literal '" + std::string(text) + "'");
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) bad(text);

    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }

    Rational result;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = s.substr(0, slash);
        auto den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) bad(text);
        mpz_class n(std::string(num), 10);
        mpz_class d(std::string(den), 10);
        if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        result = Rational(n, d);
        result.canonicalize();
    } else {
        long exponent = 0;
        if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
            auto exp_text = s.substr(e + 1);
            bool exp_negative = false;
            if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
                exp_negative = exp_text.front() == '-';
                exp_text.remove_prefix(1);
            }
            if (!all_digits(exp_text) || exp_text.size() > 6) bad(text);
            exponent = std::stol(std::string(exp_text));
            if (exp_negative) exponent = -exponent;
            s = s.substr(0, e);
        }
        std::string digits;
        auto dot = s.find('.');
        if (dot == std::string_view::npos) {
            if (!all_digits(s)) bad(text);
            digits = std::string(s);
        } else {
            auto int_part = s.substr(0, dot);
            auto frac_part = s.substr(dot + 1);
            if ((int_part.empty() && frac_part.empty()) ||
                (!int_part.empty() && !all_digits(int_part)) ||
                (!frac_part.empty() && !all_digits(frac_part))) {
                bad(text);
            }
            digits = std::string(int_part) + std::string(frac_part);
            exponent -= static_cast<long>(frac_part.size());
        }
        if (digits.empty()) digits = "0";
        mpz_class mantissa(digits, 10);
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
        result = exponent < 0 ? Rational(mantissa, scale) : Rational(mantissa * scale);
        result.canonicalize();
    }
    return negative ? Rational(-result) : result;
}

std::string to_fraction_string(const Rational& value) { return value.get_str(10); }

std::string to_decimal_string(const Rational& value, int significant_digits) {
    // mpf keeps enough precision that only the final %g rounding matters.
    mpf_class f(value, 256);
    char buffer[128];
    gmp_snprintf(buffer, sizeof buffer, "%.*Fg", significant_digits, f.get_mpf_t());
    return buffer;
}

double to_double(const Rational& value) { return value.get_d(); }

Rational from_double(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("non-finite double has no rational value");
    Rational r;
    mpq_set_d(r.get_mpq_t(), value);
    return r;
}

Rational pow(const Rational& base, unsigned long exponent) {
    Rational r;
    mpz_pow_ui(mpq_numref(r.get_mpq_t()), mpq_numref(base.get_mpq_t()), exponent);
    mpz_pow_ui(mpq_denref(r.get_mpq_t()), mpq_denref(base.get_mpq_t()), exponent);
    return r;
}

}  // namespace pmca
