#include "pmca/ratfunc.hpp"

#include <algorithm>
#include <stdexcept>

#include "pmca/error.hpp"

namespace pmca {

// ---------------------------------------------------------------------------------------------
// Monomial

Monomial Monomial::variable(ParamName name, unsigned exponent) {
    Monomial m;
    if (exponent > 0) m.factors_.emplace_back(std::move(name), exponent);
    return m;
}

unsigned Monomial::degree() const {
    unsigned d = 0;
    for (const auto& [_, e] : factors_) d += e;
    return d;
}

unsigned Monomial::exponent(std::string_view name) const {
    auto it = std::lower_bound(factors_.begin(), factors_.end(), name,
                               [](const Factor& f, std::string_view n) { return f.first < n; });
    return it != factors_.end() && it->first == name ? it->second : 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
    Monomial out;
    out.factors_.reserve(factors_.size() + other.factors_.size());
    auto a = factors_.begin();
    auto b = other.factors_.begin();
    while (a != factors_.end() || b != other.factors_.end()) {
        if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
            out.factors_.push_back(*a++);
        } else if (a == factors_.end() || b->first < a->first) {
            out.factors_.push_back(*b++);
        } else {
            out.factors_.emplace_back(a->first, a->second + b->second);
            ++a;
            ++b;
        }
    }
    return out;
}

std::optional<Monomial> Monomial::divide(const Monomial& other) const {
    Monomial out;
    auto a = factors_.begin();
    for (const auto& [name, e] : other.factors_) {
        while (a != factors_.end() && a->first < name) out.factors_.push_back(*a++);
        if (a == factors_.end() || a->first != name || a->second < e) return std::nullopt;
        if (a->second > e) out.factors_.emplace_back(name, a->second - e);
        ++a;
    }
    while (a != factors_.end()) out.factors_.push_back(*a++);
    return out;
}

Monomial Monomial::gcd(const Monomial& other) const {
    Monomial out;
    auto a = factors_.begin();
    auto b = other.factors_.begin();
    while (a != factors_.end() && b != other.factors_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            out.factors_.emplace_back(a->first, std::min(a->second, b->second));
            ++a;
            ++b;
        }
    }
    return out;
}

Monomial Monomial::reduce(std::string_view name) const {
    Monomial out = *this;
    for (auto it = out.factors_.begin(); it != out.factors_.end(); ++it) {
        if (it->first == name) {
            if (--it->second == 0) out.factors_.erase(it);
            return out;
        }
    }
    throw std::logic_error("Monomial::reduce: parameter not present");
}

std::string Monomial::to_string() const {
    std::string s;
    for (const auto& [name, e] : factors_) {
        if (!s.empty()) s += '*';
        s += name;
        if (e > 1) s += '^' + std::to_string(e);
    }
    return s.empty() ? "1" : s;
}

bool MonomialOrder::operator()(const Monomial& lhs, const Monomial& rhs) const {
    unsigned dl = lhs.degree();
    unsigned dr = rhs.degree();
    if (dl != dr) return dl < dr;
    const auto& a = lhs.factors();
    const auto& b = rhs.factors();
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (a[i].first != b[i].first) return a[i].first < b[i].first;
        if (a[i].second != b[i].second) return a[i].second > b[i].second;
    }
    // Equal degree and a common prefix implies equal monomials.
    return false;
}

// ---------------------------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(const Rational& constant) {
    if (!pmca::is_zero(constant)) terms_.emplace(Monomial{}, constant);
}

Polynomial Polynomial::variable(ParamName name) { return term(Rational(1), Monomial::variable(std::move(name))); }

Polynomial Polynomial::term(const Rational& coefficient, Monomial monomial) {
    Polynomial p;
    if (!pmca::is_zero(coefficient)) p.terms_.emplace(std::move(monomial), coefficient);
    return p;
}

bool Polynomial::is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant()); }

std::optional<Rational> Polynomial::constant_value() const {
    if (terms_.empty()) return Rational(0);
    if (terms_.size() == 1 && terms_.begin()->first.is_constant()) return terms_.begin()->second;
    return std::nullopt;
}

const Monomial& Polynomial::leading_monomial() const {
    if (terms_.empty()) throw std::logic_error("leading monomial of the zero polynomial");
    return terms_.rbegin()->first;
}

const Rational& Polynomial::leading_coefficient() const {
    if (terms_.empty()) throw std::logic_error("leading coefficient of the zero polynomial");
    return terms_.rbegin()->second;
}

std::set<ParamName> Polynomial::parameters() const {
    std::set<ParamName> out;
    for (const auto& [m, _] : terms_) {
        for (const auto& [name, e] : m.factors()) out.insert(name);
    }
    return out;
}

unsigned Polynomial::degree_in(std::string_view name) const {
    unsigned d = 0;
    for (const auto& [m, _] : terms_) d = std::max(d, m.exponent(name));
    return d;
}

unsigned Polynomial::total_degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }

Rational Polynomial::evaluate(const Valuation& valuation) const {
    Rational sum = 0;
    Rational product;
    for (const auto& [m, c] : terms_) {
        product = c;
        for (const auto& [name, e] : m.factors()) {
            auto it = valuation.find(name);
            if (it == valuation.end()) throw EvaluationError("parameter '" + name + "' has no value");
            if (e == 1) {
                product *= it->second;
            } else {
                product *= pow(it->second, e);
            }
        }
        sum += product;
    }
    return sum;
}

Polynomial Polynomial::derivative(std::string_view name) const {
    Polynomial out;
    for (const auto& [m, c] : terms_) {
        unsigned e = m.exponent(name);
        if (e == 0) continue;
        out.add_term(m.reduce(name), c * e);
    }
    return out;
}

std::optional<Polynomial> Polynomial::divide_exact(const Polynomial& divisor) const {
    if (divisor.is_zero()) throw std::domain_error("polynomial division by zero");
    if (auto c = divisor.constant_value()) {
        Polynomial q = *this;
        q *= Rational(1 / *c);
        return q;
    }
    Polynomial remainder = *this;
    Polynomial quotient;
    const Monomial& lead_m = divisor.leading_monomial();
    const Rational& lead_c = divisor.leading_coefficient();
    while (!remainder.is_zero()) {
        auto qm = remainder.leading_monomial().divide(lead_m);
        if (!qm) return std::nullopt;
        Rational qc = remainder.leading_coefficient() / lead_c;
        Polynomial t = Polynomial::term(qc, *qm);
        quotient.add_term(*qm, qc);
        remainder -= t * divisor;
    }
    return quotient;
}

Monomial Polynomial::monomial_content() const {
    if (terms_.empty()) return {};
    Monomial g = terms_.begin()->first;
    for (const auto& [m, _] : terms_) {
        if (g.is_constant()) break;
        g = g.gcd(m);
    }
    return g;
}

Polynomial Polynomial::divide_monomial(const Monomial& m) const {
    if (m.is_constant()) return *this;
    Polynomial out;
    for (const auto& [t, c] : terms_) {
        auto q = t.divide(m);
        if (!q) throw std::logic_error("monomial does not divide polynomial");
        out.terms_.emplace_hint(out.terms_.end(), std::move(*q), c);
    }
    return out;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
    if (pmca::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (pmca::is_zero(it->second)) terms_.erase(it);
    }
}

Polynomial Polynomial::operator-() const {
    Polynomial out = *this;
    for (auto& [_, c] : out.terms_) c = -c;
    return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
    for (const auto& [m, c] : other.terms_) add_term(m, -c);
    return *this;
}

Polynomial& Polynomial::operator*=(const Rational& scalar) {
    if (pmca::is_zero(scalar)) {
        terms_.clear();
    } else {
        for (auto& [_, c] : terms_) c *= scalar;
    }
    return *this;
}

Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs) {
    Polynomial out;
    if (lhs.is_zero() || rhs.is_zero()) return out;
    for (const auto& [ma, ca] : lhs.terms_) {
        for (const auto& [mb, cb] : rhs.terms_) out.add_term(ma * mb, ca * cb);
    }
    return out;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        Rational magnitude = abs(c);
        if (first) {
            if (sgn(c) < 0) s += '-';
        } else {
            s += sgn(c) < 0 ? " - " : " + ";
        }
        first = false;
        if (m.is_constant()) {
            s += to_fraction_string(magnitude);
        } else if (magnitude == 1) {
            s += m.to_string();
        } else {
            s += to_fraction_string(magnitude) + "*" + m.to_string();
        }
    }
    return s;
}

// ---------------------------------------------------------------------------------------------
// RationalFunction

RationalFunction::RationalFunction(Polynomial numerator) : num_(std::move(numerator)), den_(1) { normalize(); }

RationalFunction::RationalFunction(Polynomial numerator, Polynomial denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
    if (den_.is_zero()) throw std::domain_error("rational function with zero denominator");
    normalize();
}

void RationalFunction::normalize() {
    if (num_.is_zero()) {
        den_ = Polynomial(1);
        return;
    }
    Monomial common = num_.monomial_content().gcd(den_.monomial_content());
    if (!common.is_constant()) {
        num_ = num_.divide_monomial(common);
        den_ = den_.divide_monomial(common);
    }
    // Scale so the denominator has coprime integer coefficients and a positive first term
    // (the lowest in the monomial order, so "1 - r" keeps its printed sign).
    mpz_class lcm_den = 1;
    mpz_class gcd_num = 0;
    for (const auto& [_, c] : den_.terms()) {
        mpz_lcm(lcm_den.get_mpz_t(), lcm_den.get_mpz_t(), c.get_den_mpz_t());
        mpz_gcd(gcd_num.get_mpz_t(), gcd_num.get_mpz_t(), c.get_num_mpz_t());
    }
    Rational scale(lcm_den, gcd_num);
    scale.canonicalize();
    if (sgn(den_.terms().begin()->second) < 0) scale = -scale;
    if (scale != 1) {
        num_ *= scale;
        den_ *= scale;
    }
}

std::optional<Rational> RationalFunction::constant_value() const {
    auto n = num_.constant_value();
    auto d = den_.constant_value();
    if (n && d) return Rational(*n / *d);
    return std::nullopt;
}

std::set<ParamName> RationalFunction::parameters() const {
    auto out = num_.parameters();
    auto d = den_.parameters();
    out.insert(d.begin(), d.end());
    return out;
}

Rational RationalFunction::evaluate(const Valuation& valuation) const {
    Rational d = den_.evaluate(valuation);
    if (pmca::is_zero(d)) throw EvaluationError("denominator vanishes at valuation");
    return num_.evaluate(valuation) / d;
}

RationalFunction RationalFunction::partial_derivative(std::string_view name) const {
    Polynomial dn = num_.derivative(name);
    Polynomial dd = den_.derivative(name);
    if (dd.is_zero()) return RationalFunction(dn, den_);
    Polynomial top = dn * den_ - num_ * dd;
    if (auto reduced = top.divide_exact(den_)) return RationalFunction(std::move(*reduced), den_).simplified();
    return RationalFunction(std::move(top), den_ * den_).simplified();
}

RationalFunction RationalFunction::simplified() const {
    if (num_.is_zero() || den_.is_constant()) return *this;
    if (auto q = num_.divide_exact(den_)) return RationalFunction(std::move(*q));
    if (auto q = den_.divide_exact(num_)) return RationalFunction(Polynomial(1), std::move(*q));
    return *this;
}

RationalFunction RationalFunction::operator-() const {
    RationalFunction out = *this;
    out.num_ = -out.num_;
    return out;
}

RationalFunction operator+(const RationalFunction& f, const RationalFunction& g) {
    if (f.den_ == g.den_) return {f.num_ + g.num_, f.den_};
    return {f.num_ * g.den_ + g.num_ * f.den_, f.den_ * g.den_};
}

RationalFunction operator-(const RationalFunction& f, const RationalFunction& g) { return f + (-g); }

RationalFunction operator*(const RationalFunction& f, const RationalFunction& g) {
    return {f.num_ * g.num_, f.den_ * g.den_};
}

RationalFunction operator/(const RationalFunction& f, const RationalFunction& g) {
    if (g.is_zero()) throw std::domain_error("division by the identically-zero function");
    return {f.num_ * g.den_, f.den_ * g.num_};
}

namespace {

bool prints_as_atom(const Polynomial& p) {
    if (p.size() != 1) return false;
    const auto& [m, c] = *p.terms().begin();
    if (m.is_constant()) return sgn(c) > 0 && c.get_den() == 1;
    return c == 1 && m.factors().size() == 1 && m.factors().front().second == 1;
}

}  // namespace

std::string RationalFunction::to_string() const {
    if (den_ == Polynomial(1)) return num_.to_string();
    std::string n = num_.size() == 1 ? num_.to_string() : "(" + num_.to_string() + ")";
    std::string d = prints_as_atom(den_) ? den_.to_string() : "(" + den_.to_string() + ")";
    return n + " / " + d;
}

}  // namespace pmca
