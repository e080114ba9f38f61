#pragma once

// Exact sparse multivariate polynomials and rational functions over the rationals.
//
// Monomials are ordered by total degree, ties broken lexicographically on parameter
// identifiers (a higher exponent on an earlier identifier sorts first). Polynomials store
// their terms in ascending order, which is also the printing order, so "1 - r" prints
// constant first and "3/4*a1 + 1/4*a2" prints a1 before a2. The leading term used for
// division is the greatest term under this order; the denominator sign is fixed on the lowest.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmca/rational.hpp"

namespace pmca {

using ParamName = std::string;

/// Assignment of exact values to parameters.
using Valuation = std::map<ParamName, Rational, std::less<>>;

class Monomial {
  public:
    using Factor = std::pair<ParamName, unsigned>;

    Monomial() = default;
    static Monomial variable(ParamName name, unsigned exponent = 1);

    bool is_constant() const { return factors_.empty(); }
    unsigned degree() const;
    unsigned exponent(std::string_view name) const;
    const std::vector<Factor>& factors() const { return factors_; }

    Monomial operator*(const Monomial& other) const;
    /// this / other when other divides this.
    std::optional<Monomial> divide(const Monomial& other) const;
    Monomial gcd(const Monomial& other) const;
    /// Removes one power of `name`; requires exponent(name) > 0.
    Monomial reduce(std::string_view name) const;

    std::string to_string() const;

    friend bool operator==(const Monomial&, const Monomial&) = default;

  private:
    std::vector<Factor> factors_;  // sorted by name, exponents > 0
};

struct MonomialOrder {
    bool operator()(const Monomial& lhs, const Monomial& rhs) const;
};

class Polynomial {
  public:
    using TermMap = std::map<Monomial, Rational, MonomialOrder>;

    Polynomial() = default;
    Polynomial(const Rational& constant);  // NOLINT(google-explicit-constructor)
    Polynomial(long constant) : Polynomial(Rational(constant)) {}  // NOLINT
    static Polynomial variable(ParamName name);
    static Polynomial term(const Rational& coefficient, Monomial monomial);

    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    std::optional<Rational> constant_value() const;
    std::size_t size() const { return terms_.size(); }

    const Monomial& leading_monomial() const;
    const Rational& leading_coefficient() const;

    std::set<ParamName> parameters() const;
    unsigned degree_in(std::string_view name) const;
    unsigned total_degree() const;

    Rational evaluate(const Valuation& valuation) const;
    Polynomial derivative(std::string_view name) const;

    /// Quotient if `divisor` divides this exactly, otherwise nullopt.
    std::optional<Polynomial> divide_exact(const Polynomial& divisor) const;
    /// gcd of all monomials (the largest monomial dividing every term).
    Monomial monomial_content() const;
    Polynomial divide_monomial(const Monomial& m) const;

    Polynomial operator-() const;
    Polynomial& operator+=(const Polynomial& other);
    Polynomial& operator-=(const Polynomial& other);
    Polynomial& operator*=(const Rational& scalar);
    friend Polynomial operator+(Polynomial lhs, const Polynomial& rhs) { return lhs += rhs; }
    friend Polynomial operator-(Polynomial lhs, const Polynomial& rhs) { return lhs -= rhs; }
    friend Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs);
    friend Polynomial operator*(Polynomial lhs, const Rational& s) { return lhs *= s; }

    std::string to_string() const;

    friend bool operator==(const Polynomial& lhs, const Polynomial& rhs) { return lhs.terms_ == rhs.terms_; }

  private:
    void add_term(const Monomial& m, const Rational& c);

    TermMap terms_;  // no zero coefficients
};

/// numerator / denominator, kept in normal form: the denominator is nonzero, has integer
/// coefficients with gcd 1 and a positive coefficient on its lowest-order term; common monomial factors are
/// cancelled; 0/c is 0/1.
class RationalFunction {
  public:
    RationalFunction() : den_(1) {}
    RationalFunction(const Rational& constant) : num_(constant), den_(1) {}  // NOLINT
    RationalFunction(long constant) : RationalFunction(Rational(constant)) {}  // NOLINT
    RationalFunction(Polynomial numerator);  // NOLINT
    /// Throws std::domain_error if the denominator is the zero polynomial.
    RationalFunction(Polynomial numerator, Polynomial denominator);
    static RationalFunction variable(ParamName name) { return {Polynomial::variable(std::move(name))}; }

    const Polynomial& numerator() const { return num_; }
    const Polynomial& denominator() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    std::optional<Rational> constant_value() const;
    std::set<ParamName> parameters() const;

    /// Throws EvaluationError if a parameter is unbound or the denominator vanishes.
    Rational evaluate(const Valuation& valuation) const;
    RationalFunction partial_derivative(std::string_view name) const;

    /// Optional simplification: cancels the fraction when one side divides the other.
    RationalFunction simplified() const;

    RationalFunction operator-() const;
    friend RationalFunction operator+(const RationalFunction& f, const RationalFunction& g);
    friend RationalFunction operator-(const RationalFunction& f, const RationalFunction& g);
    friend RationalFunction operator*(const RationalFunction& f, const RationalFunction& g);
    /// Throws std::domain_error when g is identically zero.
    friend RationalFunction operator/(const RationalFunction& f, const RationalFunction& g);

    /// Deterministic infix form, e.g. "(3/4*a1 + 1/4*a2) / (1 - r)".
    std::string to_string() const;

    friend bool operator==(const RationalFunction&, const RationalFunction&) = default;

  private:
    void normalize();

    Polynomial num_;
    Polynomial den_;
};

/// Parses infix text with + - * / ^, parentheses, identifiers and decimal/fraction literals.
/// Throws ParseError on malformed text and std::domain_error on division by zero.
RationalFunction parse_rational_function(std::string_view text);

}  // namespace pmca
