#pragma once

// The six-state UUV valve mission chain, built directly through the Dtmc API so that the
// symbolic tests do not depend on the model-file reader.

#include "pmca/dtmc.hpp"
#include "pmca/monitor.hpp"
#include "pmca/paramcheck.hpp"
#include "pmca/simulator.hpp"

namespace pmca::testing {

inline Dtmc uuv_model(const Rational& gamma = Rational(3, 4)) {
    auto sid = [](std::uint32_t i) { return StateId{i}; };
    std::vector<State> states{
        {"S1", {"s=1"}, {Layer::Normal, false}},  {"S2", {"s=2"}, {Layer::Normal, false}},
        {"S3", {"s=3"}, {Layer::Normal, false}},  {"S4", {"s=4"}, {Layer::Unsafe, false}},
        {"S5", {"s=5"}, {Layer::Failure, false}}, {"S6", {"s=6"}, {Layer::Failure, true}},
    };
    std::vector<std::vector<ActionRow>> actions(6);
    actions[0] = {
        {"speed1", gamma, {{sid(1), Param{"a1"}}, {sid(3), Param{"b1"}}, {sid(0), Complement{}}}},
        {"speed2", 1 - gamma, {{sid(1), Param{"a2"}}, {sid(3), Param{"b2"}}, {sid(0), Complement{}}}},
    };
    actions[1] = {{"proceed", 1, {{sid(2), Constant{Rational(3, 10)}}, {sid(0), Constant{Rational(7, 10)}}}}};
    actions[2] = {{"stay", 1, {{sid(2), Constant{1}}}}};
    actions[3] = {{"safe", 1,
                   {{sid(0), Param{"v"}},
                    {sid(1), Param{"w"}},
                    {sid(4), Param{"y"}},
                    {sid(5), Param{"x"}},
                    {sid(3), Complement{}}}}};
    actions[4] = {{"stay", 1, {{sid(4), Constant{1}}}}};
    actions[5] = {{"stay", 1, {{sid(5), Constant{1}}}}};
    ParamBox box{
        {"a1", {Rational(1, 200), Rational(1, 2)}},   {"a2", {Rational(1, 200), Rational(1, 2)}},
        {"b1", {Rational(1, 200), Rational(9, 20)}},  {"b2", {Rational(1, 200), Rational(9, 20)}},
        {"v", {Rational(1, 100), Rational(19, 20)}},  {"w", {Rational(1, 2000), Rational(1, 50)}},
        {"y", {Rational(1, 10000), Rational(1, 50)}}, {"x", {Rational(0), Rational(1, 100)}},
    };
    return Dtmc(std::move(states), sid(0), std::move(actions), std::move(box));
}

inline Valuation uuv_truth() {
    return {{"a1", Rational(1, 20)}, {"a2", Rational(3, 100)}, {"b1", Rational(1, 5)},     {"b2", Rational(1, 10)},
            {"x", Rational(1, 100000)}, {"y", Rational(1, 1000)}, {"v", Rational(3, 10)}, {"w", Rational(1, 100)}};
}

/// Posterior intervals as printed in the pre-mission table, with x at its printed point value.
inline ParamBox reference_posterior_box() {
    auto d = [](const char* s) { return parse_rational(s); };
    return {{"x", Interval::point(d("3.2e-5"))},    {"y", {d("0.0014"), d("0.0032")}}, {"v", {d("0.27"), d("0.33")}},
            {"w", {d("0.0097"), d("0.012")}},       {"a1", {d("0.047"), d("0.062")}},  {"b1", {d("0.18"), d("0.24")}},
            {"a2", {d("0.03"), d("0.04")}},         {"b2", {d("0.09"), d("0.16")}}};
}

inline ReachQuery uuv_query(const Dtmc& m, const std::string& id, const std::string& initial, const std::string& label) {
    return ReachQuery{id, m.state_id(initial), label, QueryForm::UnboundedUntil, std::nullopt, 0};
}

/// Prior knowledge as elicited before the first mission.
inline PriorTable uuv_priors() {
    auto d = [](const char* s) { return parse_rational(s); };
    auto ip = [&](const char* nl, const char* nh, const char* pl, const char* ph) {
        return PriorSpec{ImprecisePrior{{d(nl), d(nh)}, {d(pl), d(ph)}}};
    };
    return {{"x", CbiPriorSpec{{d("0.9")}, 0}},         {"y", ip("100", "300", "0.001", "0.01")},
            {"v", ip("100", "300", "0.1", "0.4")},      {"w", ip("100", "300", "0.001", "0.01")},
            {"a1", ip("100", "300", "0.01", "0.1")},    {"b1", ip("100", "300", "0.1", "0.5")},
            {"a2", ip("50", "100", "0.01", "0.1")},     {"b2", ip("50", "100", "0.1", "0.5")}};
}

/// R1/R2 from S1 pre-mission; R3/R4 are the same targets re-evaluated from the current state.
inline std::vector<QuerySpec> uuv_queries(const Dtmc& m) {
    return {{uuv_query(m, "R1", "S1", "s=3"), "R3", Threshold{Direction::AtLeast, parse_rational("0.5")}},
            {uuv_query(m, "R2", "S1", "s=6"), "R4", Threshold{Direction::AtMost, parse_rational("0.01")}}};
}

inline GroundTruth uuv_ground_truth(Valuation values = uuv_truth()) {
    return {std::move(values), GammaSite{"S1", "speed1"}};
}

inline const Interval kCampaignGammaRange{Rational(5, 8), Rational(7, 8)};

}  // namespace pmca::testing
