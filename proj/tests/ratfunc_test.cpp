#include <gtest/gtest.h>

#include <cmath>

#include "pmca/error.hpp"
#include "pmca/ratfunc.hpp"
#include "support/oracles.hpp"

using namespace pmca;
using pmca::testing::Gen;

namespace {

RationalFunction rf(const char* text) { return parse_rational_function(text); }

Valuation at(std::initializer_list<std::pair<const char*, const char*>> values) {
    Valuation v;
    for (const auto& [k, x] : values) v.emplace(k, parse_rational(x));
    return v;
}

Polynomial random_polynomial(Gen& g, const std::vector<std::string>& vars) {
    Polynomial p;
    long terms = g.range(1, 4);
    for (long t = 0; t < terms; ++t) {
        Monomial m;
        for (const auto& v : vars) {
            long e = g.range(0, 2);
            if (e > 0) m = m * Monomial::variable(v, static_cast<unsigned>(e));
        }
        p += Polynomial::term(pmca::testing::ratio(g.range(-9, 9), g.range(1, 5)), m);
    }
    return p;
}

void expect_canonical(const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) {
        EXPECT_NE(sgn(c), 0);
        for (const auto& [name, e] : m.factors()) EXPECT_GT(e, 0u) << name;
    }
}

}  // namespace

TEST(RationalTest, ParsesDecimalsExactly) {
    EXPECT_EQ(parse_rational("0.05"), Rational(1, 20));
    EXPECT_EQ(parse_rational("1e-5"), Rational(1, 100000));
    EXPECT_EQ(parse_rational("2.5E-3"), Rational(1, 400));
    EXPECT_EQ(parse_rational("-3/4"), Rational(-3, 4));
    EXPECT_THROW(parse_rational("1/0"), std::invalid_argument);
    EXPECT_THROW(parse_rational("abc"), std::invalid_argument);
}

TEST(RationalTest, DecimalRendering) {
    EXPECT_EQ(to_decimal_string(Rational(1, 3)), "0.333333");
    EXPECT_EQ(to_fraction_string(parse_rational("6/8")), "3/4");
}

TEST(PolynomialTest, ArithmeticAndPrinting) {
    Polynomial p = Polynomial::variable("p");
    Polynomial q = Polynomial::variable("q");
    EXPECT_EQ((p + q).to_string(), "p + q");
    EXPECT_EQ((Polynomial(1) - Polynomial::variable("r")).to_string(), "1 - r");
    EXPECT_TRUE((p - p).is_zero());
    auto quotient = (p * q + p).divide_exact(p);
    ASSERT_TRUE(quotient.has_value());
    EXPECT_EQ(*quotient, q + Polynomial(1));
    EXPECT_FALSE((p + q).divide_exact(p).has_value());
}

TEST(RationalFunctionTest, AddSameDenominator) {
    EXPECT_EQ(rf("p") + rf("q"), rf("p + q"));
    EXPECT_EQ(rf("1/p") + rf("-1/p"), RationalFunction(0));
    RationalFunction sum = rf("p/(1-r)") + rf("r/(1-r)");
    EXPECT_EQ(sum, rf("(p+r)/(1-r)"));
    Gen g(11);
    for (int i = 0; i < 20; ++i) {
        Valuation v{{"p", g.rational(0, 1)}, {"r", g.rational(0, Rational(1, 2))}};
        EXPECT_EQ(sum.evaluate(v), (v["p"] + v["r"]) / (1 - v["r"]));
    }
}

TEST(RationalFunctionTest, MulDivAndZero) {
    EXPECT_EQ(rf("p") * rf("1/p"), RationalFunction(1));
    EXPECT_EQ(rf("p*q") / rf("q"), rf("p"));
    EXPECT_TRUE((RationalFunction(0) * rf("p/(1-q)")).is_zero());
    EXPECT_EQ((RationalFunction(0) * rf("p/(1-q)")).denominator(), Polynomial(1));
    EXPECT_THROW(rf("p") / RationalFunction(0), std::domain_error);
}

TEST(RationalFunctionTest, Evaluate) {
    EXPECT_EQ(rf("0.75*a1 + 0.25*a2").evaluate(at({{"a1", "0.05"}, {"a2", "0.03"}})), Rational(9, 200));
    EXPECT_EQ(RationalFunction(1).evaluate({}), 1);
    EXPECT_EQ(rf("p/(1-r)").evaluate(at({{"p", "1/2"}, {"r", "1/2"}})), 1);
    EXPECT_THROW(rf("p").evaluate({}), EvaluationError);
    EXPECT_THROW(rf("p/(1-r)").evaluate(at({{"p", "1/2"}, {"r", "1"}})), EvaluationError);
}

TEST(RationalFunctionTest, Printing) {
    EXPECT_EQ(rf("(3/4*a1 + 1/4*a2) / (1 - r)").to_string(), "(3/4*a1 + 1/4*a2) / (1 - r)");
    EXPECT_EQ(rf("1/2").to_string(), "1/2");
    EXPECT_EQ(rf("p/2").to_string(), "1/2*p");
}

TEST(RationalFunctionTest, DerivativesMatchFiniteDifferences) {
    EXPECT_EQ(rf("p").partial_derivative("p"), RationalFunction(1));
    EXPECT_EQ(rf("p/(1-r)").partial_derivative("p"), rf("1/(1-r)"));
    EXPECT_EQ(rf("p/(1-r)").partial_derivative("r"), rf("p/(1-r)^2"));

    Gen g(5);
    for (const char* text : {"p/(1-r)", "p*r/(p+r)", "(1-p)^2*r/(1+p*r)"}) {
        RationalFunction f = rf(text);
        for (const char* var : {"p", "r"}) {
            RationalFunction d = f.partial_derivative(var);
            for (int i = 0; i < 10; ++i) {
                Valuation v{{"p", g.rational(Rational(1, 10), Rational(9, 10))},
                            {"r", g.rational(Rational(1, 10), Rational(9, 10))}};
                double h = 1e-5;
                Valuation up = v;
                Valuation down = v;
                up[var] += from_double(h);
                down[var] -= from_double(h);
                double fd = (to_double(f.evaluate(up)) - to_double(f.evaluate(down))) / (2 * h);
                double exact = to_double(d.evaluate(v));
                EXPECT_LE(std::abs(fd - exact), 1e-6 * std::max(1.0, std::abs(exact))) << text << " d/d" << var;
            }
        }
    }
}

TEST(RationalFunctionTest, ParserErrors) {
    EXPECT_THROW(rf("p +"), ParseError);
    EXPECT_THROW(rf("(p"), ParseError);
    EXPECT_THROW(rf("p / 0"), std::domain_error);
}

TEST(RationalFunctionProperty, FieldOperationsCommuteWithEvaluation) {
    Gen g(2024);
    std::vector<std::string> vars{"a", "b", "c"};
    for (int trial = 0; trial < 30; ++trial) {
        RationalFunction f(random_polynomial(g, vars), random_polynomial(g, vars));
        RationalFunction h(random_polynomial(g, vars), random_polynomial(g, vars));
        if (f.denominator().is_zero()) continue;
        RationalFunction sum = f + h;
        RationalFunction prod = f * h;
        std::optional<RationalFunction> quot;
        if (!h.is_zero()) quot = f / h;
        for (const auto* r : {&sum, &prod}) {
            expect_canonical(r->numerator());
            expect_canonical(r->denominator());
        }
        for (int i = 0; i < 100; ++i) {
            Valuation v;
            for (const auto& name : vars) v[name] = g.rational(-2, 2, 12);
            Rational fv;
            Rational hv;
            try {
                fv = f.evaluate(v);
                hv = h.evaluate(v);
            } catch (const EvaluationError&) {
                continue;
            }
            EXPECT_EQ(sum.evaluate(v), fv + hv);
            EXPECT_EQ(prod.evaluate(v), fv * hv);
            if (quot && sgn(hv) != 0) EXPECT_EQ(quot->evaluate(v), fv / hv);
        }
    }
}

TEST(RationalFunctionProperty, NormalizationIsIdempotent) {
    Gen g(99);
    std::vector<std::string> vars{"x", "y"};
    for (int trial = 0; trial < 50; ++trial) {
        Polynomial n = random_polynomial(g, vars);
        Polynomial d = random_polynomial(g, vars);
        if (d.is_zero()) continue;
        RationalFunction f(n, d);
        RationalFunction again(f.numerator(), f.denominator());
        EXPECT_EQ(f, again);
        EXPECT_GT(sgn(f.denominator().terms().begin()->second), 0);
    }
}
