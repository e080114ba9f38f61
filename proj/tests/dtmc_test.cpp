#include <gtest/gtest.h>

#include "pmca/dtmc.hpp"
#include "pmca/error.hpp"
#include "support/oracles.hpp"
#include "support/uuv.hpp"

using namespace pmca;
using namespace pmca::testing;

namespace {

std::vector<State> plain_states(std::size_t n) {
    std::vector<State> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"S" + std::to_string(i + 1), {}, {}});
    return out;
}

}  // namespace

TEST(InduceTransitionTest, PolicyMix) {
    TransitionExpr e = induce_transition({{"speed1", Rational(3, 4)}, {"speed2", Rational(1, 4)}},
                                         {Param{"a1"}, Param{"a2"}});
    RationalFunction f = to_rational_function(e);
    EXPECT_EQ(f.to_string(), "3/4*a1 + 1/4*a2");
    EXPECT_EQ(f.evaluate({{"a1", Rational(1, 20)}, {"a2", Rational(3, 100)}}), Rational(9, 200));
}

TEST(InduceTransitionTest, DeterministicPolicyKeepsBareParameter) {
    EXPECT_EQ(induce_transition({{"safe", 1}}, {Param{"v"}}), TransitionExpr(Param{"v"}));
    EXPECT_EQ(induce_transition({{"safe", 1}}, {Constant{Rational(1, 3)}}), TransitionExpr(Constant{Rational(1, 3)}));
}

TEST(InduceTransitionTest, ConstantMix) {
    TransitionExpr e = induce_transition({{"a", Rational(1, 2)}, {"b", Rational(1, 2)}},
                                         {Constant{Rational(1, 5)}, Constant{Rational(2, 5)}});
    EXPECT_EQ(e, TransitionExpr(Constant{Rational(3, 10)}));
}

TEST(InduceTransitionTest, Errors) {
    EXPECT_THROW(induce_transition({}, {}), ValidationError);
    EXPECT_THROW(induce_transition({{"a", Rational(1, 2)}}, {Param{"p"}}), ValidationError);
    EXPECT_THROW(induce_transition({{"a", 1}}, {Param{"p"}, Param{"q"}}), ValidationError);
}

TEST(ValidateTest, UuvModelAtTruth) {
    Dtmc m = uuv_model();
    EXPECT_TRUE(validate(m, {uuv_truth()}).empty());
    EXPECT_TRUE(validate(m).empty());
}

TEST(ValidateTest, RowSumViolation) {
    std::vector<Row> rows(3);
    rows[0] = {{StateId{1}, Constant{Rational(3, 5)}}, {StateId{2}, Constant{Rational(3, 5)}}};
    rows[1] = {{StateId{1}, Constant{1}}};
    rows[2] = {{StateId{2}, Constant{1}}};
    Dtmc m = Dtmc::from_rows(plain_states(3), StateId{0}, rows, {});
    auto v = validate(m);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::RowSum);
    EXPECT_THROW(to_parametric_matrix(m), ValidationError);
}

TEST(ValidateTest, FailureStateMustBeAbsorbing) {
    auto states = plain_states(2);
    states[1].tag = {Layer::Failure, true};
    std::vector<Row> rows(2);
    rows[0] = {{StateId{1}, Constant{1}}};
    rows[1] = {{StateId{0}, Constant{Rational(1, 10)}}, {StateId{1}, Complement{}}};
    auto v = validate(Dtmc::from_rows(states, StateId{0}, rows, {}));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::NotAbsorbing);
}

TEST(ValidateTest, MissingInitialAndUndeclaredParameter) {
    std::vector<Row> rows(1);
    rows[0] = {{StateId{0}, Constant{1}}};
    auto v = validate(Dtmc::from_rows(plain_states(1), StateId{4}, rows, {}));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::MissingInitial);

    rows[0] = {{StateId{0}, Param{"q"}}};
    v = validate(Dtmc::from_rows(plain_states(1), StateId{0}, rows, {}));
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v[0].kind, ViolationKind::UndeclaredParameter);
}

TEST(ParametricMatrixTest, Rendering) {
    Dtmc m = uuv_model();
    ParametricMatrix p = to_parametric_matrix(m);
    EXPECT_EQ(p[1].at(StateId{2}), RationalFunction(Rational(3, 10)));
    EXPECT_EQ(p[0].at(StateId{1}).to_string(), "3/4*a1 + 1/4*a2");
    EXPECT_EQ(p[0].at(StateId{0}), parse_rational_function("1 - 3/4*a1 - 1/4*a2 - 3/4*b1 - 1/4*b2"));
}

TEST(DtmcProperty, RenderedRowsSumToOneInsideBox) {
    Gen g(7);
    Dtmc m = uuv_model();
    ParametricMatrix p = to_parametric_matrix(m);
    for (int i = 0; i < 200; ++i) {
        Valuation v = random_valuation(g, m.parameters());
        for (const auto& row : p) {
            Rational sum = 0;
            for (const auto& [_, f] : row) {
                Rational x = f.evaluate(v);
                EXPECT_GE(x, 0);
                EXPECT_LE(x, 1);
                sum += x;
            }
            EXPECT_EQ(sum, 1);
        }
    }
}

TEST(DtmcProperty, RandomChainsValidate) {
    Gen g(3);
    for (int i = 0; i < 50; ++i) {
        Dtmc m = random_chain(g).model;
        EXPECT_TRUE(validate(m).empty());
        for (int k = 0; k < 5; ++k) EXPECT_TRUE(validate(m, {random_valuation(g, m.parameters())}).empty());
    }
}

TEST(DtmcTest, ParameterSites) {
    auto sites = uuv_model().parameter_sites();
    ASSERT_EQ(sites.at("a1").size(), 1u);
    EXPECT_EQ(sites.at("a1")[0].action, "speed1");
    EXPECT_EQ(sites.at("x")[0].destination, StateId{5});
}
