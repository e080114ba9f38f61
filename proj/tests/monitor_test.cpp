#include "pmca/monitor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/oracles.hpp"
#include "support/uuv.hpp"

namespace pmca {
namespace {

using testing::Gen;
using testing::ratio;

TraceEvent event(const Dtmc& m, std::uint64_t step, const char* from, const char* action, const char* to) {
    return TraceEvent{50, step, m.state_id(from), action, m.state_id(to)};
}

std::string dump(const StepRecord& r) {
    std::ostringstream out;
    out << r.step << ' ' << r.state.index;
    for (const auto& [name, e] : r.estimates) out << ' ' << name << e.bounds.lo << ',' << e.bounds.hi << ',' << e.conflict;
    for (const auto& [id, b] : r.bounds) out << ' ' << id << b.bounds.lo << ',' << b.bounds.hi;
    for (const auto& v : r.verdicts) out << ' ' << to_string(v.status) << to_string(v.hint);
    out << ' ' << to_string(r.conflict.classification);
    return out.str();
}

/// Shared fixture: cache, seed-1 campaign of 49 missions and the derived runtime priors.
class UuvMonitor : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        model_ = new Dtmc(testing::uuv_model());
        queries_ = new std::vector<QuerySpec>(testing::uuv_queries(*model_));
        cache_ = new ClosedFormCache(build_cache(*model_, *queries_, "test"));
        Campaign c = generate_campaign(*model_, testing::uuv_ground_truth(), 49, testing::kCampaignGammaRange, 1);
        previous_ = new CountTable(count_transitions(c.missions));
        runtime_ = new PriorTable(runtime_priors(*model_, testing::uuv_priors(), *previous_));
    }
    static void TearDownTestSuite() {
        delete model_;
        delete queries_;
        delete cache_;
        delete previous_;
        delete runtime_;
    }

    Monitor make(MonitorConfig config = {}) const { return Monitor(*model_, *runtime_, *queries_, *cache_, config); }

    Mission nominal(std::uint64_t seed) const {
        return longest_mission(*model_, testing::uuv_ground_truth(), Rational(3, 4), 20, seed, 50);
    }

    static Dtmc* model_;
    static std::vector<QuerySpec>* queries_;
    static ClosedFormCache* cache_;
    static CountTable* previous_;
    static PriorTable* runtime_;
};

Dtmc* UuvMonitor::model_ = nullptr;
std::vector<QuerySpec>* UuvMonitor::queries_ = nullptr;
ClosedFormCache* UuvMonitor::cache_ = nullptr;
CountTable* UuvMonitor::previous_ = nullptr;
PriorTable* UuvMonitor::runtime_ = nullptr;

TEST(Verdict, StatusFollowsIntervalAgainstThreshold) {
    Gen g(41);
    Dtmc m = testing::uuv_model();
    auto queries = testing::uuv_queries(m);
    for (int i = 0; i < 500; ++i) {
        Rational a = g.rational(0, 1);
        Rational b = g.rational(0, 1);
        Interval iv{std::min(a, b), std::max(a, b)};
        QuerySpec q = queries[g.coin() ? 0 : 1];
        q.threshold->value = g.rational(0, 1);
        Verdict v = make_verdict(m, q, 7, BoundResult{iv, true, false});
        bool all_pass = q.threshold->direction == Direction::AtLeast ? iv.lo >= q.threshold->value
                                                                     : iv.hi <= q.threshold->value;
        bool all_fail = q.threshold->direction == Direction::AtLeast ? iv.hi < q.threshold->value
                                                                     : iv.lo > q.threshold->value;
        VerdictStatus expected = all_pass   ? VerdictStatus::Satisfied
                                 : all_fail ? VerdictStatus::Violated
                                            : VerdictStatus::Indeterminate;
        EXPECT_EQ(v.status, expected);
        EXPECT_EQ(v.step, 7u);
        EXPECT_EQ(v.query, q.runtime_id);
        EXPECT_EQ(v.hint == ActionHint::Continue, v.status != VerdictStatus::Violated);
    }
}

TEST(Verdict, HintsDependOnTargetLayer) {
    Dtmc m = testing::uuv_model();
    auto queries = testing::uuv_queries(m);
    Verdict completion = make_verdict(m, queries[0], 1, BoundResult{{ratio(1, 10), ratio(2, 10)}, true, false});
    EXPECT_EQ(completion.status, VerdictStatus::Violated);
    EXPECT_EQ(completion.hint, ActionHint::Restart);
    Verdict catastrophe = make_verdict(m, queries[1], 1, BoundResult{{ratio(1, 2), Rational(1)}, true, false});
    EXPECT_EQ(catastrophe.status, VerdictStatus::Violated);
    EXPECT_EQ(catastrophe.hint, ActionHint::Abort);

    QuerySpec reporting = queries[0];
    reporting.threshold.reset();
    Verdict r = make_verdict(m, reporting, 1, BoundResult{{0, 1}, true, false});
    EXPECT_EQ(r.status, VerdictStatus::Reported);
    EXPECT_EQ(r.hint, ActionHint::Continue);
}

TEST(Cache, OneClosedFormPerState) {
    Dtmc m = testing::uuv_model();
    auto queries = testing::uuv_queries(m);
    ClosedFormCache cache = build_cache(m, queries, "h");
    EXPECT_EQ(cache.model_hash, "h");
    EXPECT_EQ(cache.forms.at("R1").size(), m.size());
    EXPECT_EQ(cache.at("R1", m.state_id("S3")).function, RationalFunction(1));
    EXPECT_EQ(cache.at("R2", m.state_id("S6")).function, RationalFunction(1));
    EXPECT_EQ(cache.at("R2", m.state_id("S3")).function, RationalFunction(0));
    EXPECT_THROW(cache.at("R9", m.state_id("S1")), ValidationError);

    queries[0].query.form = QueryForm::BoundedUntil;
    queries[0].query.bound = 5;
    EXPECT_THROW(build_cache(m, queries, "h"), ValidationError);
}

TEST(Priors, RoutingByDestinationLayer) {
    Dtmc m = testing::uuv_model();
    PriorTable priors = testing::uuv_priors();
    EXPECT_NO_THROW(check_priors(m, priors));

    PriorTable missing = priors;
    missing.erase("w");
    EXPECT_THROW(check_priors(m, missing), ValidationError);

    PriorTable wrong_x = priors;
    wrong_x["x"] = ImprecisePrior{{100, 300}, {ratio(1, 1000), ratio(1, 100)}};
    EXPECT_THROW(check_priors(m, wrong_x), ValidationError);

    PriorTable wrong_y = priors;
    wrong_y["y"] = CbiPriorSpec{{ratio(9, 10)}, 0};
    EXPECT_THROW(check_priors(m, wrong_y), ValidationError);

    PriorTable extra = priors;
    extra["z"] = PointPrior{10, ratio(1, 2)};
    EXPECT_THROW(check_priors(m, extra), ValidationError);
}

TEST(Premission, NoDataGivesPriorTable) {
    Dtmc m = testing::uuv_model();
    auto queries = testing::uuv_queries(m);
    ClosedFormCache cache = build_cache(m, queries, "h");
    PriorTable priors = testing::uuv_priors();
    PremissionReport r = premission_verify(m, priors, CountTable{}, queries, cache);
    for (const auto& [name, prior] : priors) {
        const ParamEstimate& e = r.estimates.at(name);
        EXPECT_EQ(e.sample_size, 0u);
        if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
            EXPECT_EQ(e.bounds, ip->expectation) << name;
            EXPECT_EQ(r.box.at(name), ip->expectation);
        } else {
            // theta = 0.9 with no data: (0.1 / 0.9) * 1 = 1/9, rounded upward.
            EXPECT_EQ(e.kind, EstimatorKind::Cbi);
            EXPECT_EQ(e.bounds.lo, 0);
            EXPECT_GE(e.bounds.hi, ratio(1, 9));
            EXPECT_LT(e.bounds.hi, ratio(1, 9) + Rational(1e-15));
        }
    }
    EXPECT_EQ(r.bounds.size(), 2u);
    EXPECT_LE(r.bounds.at("R1").bounds.lo, r.bounds.at("R1").bounds.hi);
}

TEST_F(UuvMonitor, RuntimePriorsCarryPremissionPosteriors) {
    const PriorTable priors = testing::uuv_priors();
    PremissionReport pre = premission_verify(*model_, priors, *previous_, *queries_, *cache_);
    for (const auto& [name, prior] : *runtime_) {
        const PriorSpec& original = priors.at(name);
        if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
            EXPECT_EQ(ip->expectation, pre.estimates.at(name).bounds) << name;
            EXPECT_EQ(ip->pseudo_count, std::get<ImprecisePrior>(original).pseudo_count);
        } else {
            const auto& cp = std::get<CbiPriorSpec>(prior);
            EXPECT_EQ(cp.previous_count, previous_->state(model_->state_id("S4")).total);
            EXPECT_EQ(cp.prior, std::get<CbiPriorSpec>(original).prior);
        }
    }
}

TEST_F(UuvMonitor, FirstRecordEqualsPremissionPosteriors) {
    Monitor mon = make();
    StepRecord first = mon.initial_record();
    EXPECT_EQ(first.step, 0u);
    EXPECT_EQ(first.state, model_->state_id("S1"));
    PremissionReport pre = premission_verify(*model_, testing::uuv_priors(), *previous_, *queries_, *cache_);
    for (const auto& [name, e] : first.estimates) {
        EXPECT_EQ(e.bounds, pre.estimates.at(name).bounds) << name;
    }
    EXPECT_EQ(first.bounds.at("R3").bounds, pre.bounds.at("R1").bounds);
    EXPECT_EQ(first.bounds.at("R4").bounds, pre.bounds.at("R2").bounds);
}

TEST_F(UuvMonitor, RejectsBrokenChains) {
    Monitor mon = make();
    EXPECT_THROW(mon.ingest(event(*model_, 1, "S4", "safe", "S1")), ChainError);
    EXPECT_THROW(mon.ingest(event(*model_, 2, "S1", "speed1", "S2")), ChainError);
    EXPECT_THROW(mon.ingest(event(*model_, 1, "S1", "cruise", "S2")), ChainError);
    EXPECT_THROW(mon.ingest(event(*model_, 1, "S1", "speed1", "S3")), ChainError);
    EXPECT_NO_THROW(mon.ingest(event(*model_, 1, "S1", "speed1", "S2")));
    EXPECT_EQ(mon.current(), model_->state_id("S2"));
}

TEST_F(UuvMonitor, SuccessAbsorptionGivesCertainCompletion) {
    Monitor mon = make();
    mon.ingest(event(*model_, 1, "S1", "speed1", "S2"));
    StepRecord r = mon.ingest(event(*model_, 2, "S2", "proceed", "S3"));
    EXPECT_EQ(r.bounds.at("R3").bounds, Interval::point(1));
    EXPECT_EQ(r.bounds.at("R4").bounds, Interval::point(0));
    EXPECT_EQ(r.verdicts.at(0).status, VerdictStatus::Satisfied);
    EXPECT_EQ(r.verdicts.at(1).status, VerdictStatus::Satisfied);
}

TEST_F(UuvMonitor, CatastrophicAbsorptionAborts) {
    Monitor mon = make();
    mon.ingest(event(*model_, 1, "S1", "speed1", "S4"));
    StepRecord r = mon.ingest(event(*model_, 2, "S4", "safe", "S6"));
    EXPECT_EQ(r.bounds.at("R4").bounds, Interval::point(1));
    const Verdict& v = r.verdicts.at(1);
    EXPECT_EQ(v.query, "R4");
    EXPECT_EQ(v.status, VerdictStatus::Violated);
    EXPECT_EQ(v.hint, ActionHint::Abort);
    EXPECT_EQ(r.regime_violations, std::vector<ParamName>{"x"});
}

TEST_F(UuvMonitor, ConflictFreeMoveToS2TightensA1) {
    Mission mission = nominal(1001);
    Monitor mon = make();
    auto records = replay(mon, mission);
    int checked = 0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const TraceEvent& e = mission.events[i - 1];
        const ParamEstimate& before = records[i - 1].estimates.at("a1");
        const ParamEstimate& after = records[i].estimates.at("a1");
        if (e.action != "speed1") {
            EXPECT_EQ(after, before);
            continue;
        }
        if (e.to != model_->state_id("S2") || before.conflict || after.conflict) continue;
        EXPECT_LT(after.bounds.width(), before.bounds.width()) << "step " << i;
        ++checked;
    }
    EXPECT_GT(checked, 0);
}

TEST_F(UuvMonitor, ReplayIsSubstitutionOnlyAndCountsMatch) {
    Mission mission = nominal(1001);
    Monitor mon = make();
    std::uint64_t eliminations = elimination_count();
    auto records = replay(mon, mission);
    EXPECT_EQ(elimination_count(), eliminations);
    EXPECT_EQ(records.size(), mission.events.size() + 1);
    EXPECT_EQ(mon.counts(), count_transitions({mission}));
    EXPECT_EQ(mon.current(), mission.events.back().to);
    for (const auto& [name, e] : records.back().estimates) {
        if (e.kind == EstimatorKind::Cbi) continue;
        const PriorSpec& prior = runtime_->at(name);
        EXPECT_EQ(e, estimate_parameter(*model_, name, prior, mon.counts())) << name;
    }
}

TEST_F(UuvMonitor, ReplayIsDeterministic) {
    Mission mission = nominal(1002);
    Monitor a = make();
    Monitor b = make();
    auto ra = replay(a, mission);
    auto rb = replay(b, mission);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(dump(ra[i]), dump(rb[i]));
}

TEST_F(UuvMonitor, ConflictFreeWidthsNeverGrowAfterWarmUp) {
    MonitorConfig config;
    for (std::uint64_t seed : {1001u, 1002u, 1003u}) {
        Monitor mon = make(config);
        auto records = replay(mon, nominal(seed));
        for (std::size_t i = config.window + 1; i < records.size(); ++i) {
            for (const auto& [name, e] : records[i].estimates) {
                const ParamEstimate& prev = records[i - 1].estimates.at(name);
                if (e.kind != EstimatorKind::Interval || e.conflict || prev.conflict) continue;
                EXPECT_LE(e.bounds.width(), prev.bounds.width()) << name << " at step " << i;
            }
        }
    }
}

TEST_F(UuvMonitor, CompletionFromS2DominatesCompletionFromS1) {
    Monitor mon = make();
    auto records = replay(mon, nominal(1003));
    const ClosedForm& from_s1 = cache_->at("R1", model_->state_id("S1"));
    const ClosedForm& from_s2 = cache_->at("R1", model_->state_id("S2"));
    for (const auto& r : records) {
        ParamBox box;
        for (const auto& [name, e] : r.estimates) box.emplace(name, e.bounds);
        if (!box_contains(cache_->analyzed_box, box)) continue;
        Interval s1 = bound_evaluate(from_s1, box, cache_->analyzed_box).bounds;
        Interval s2 = bound_evaluate(from_s2, box, cache_->analyzed_box).bounds;
        EXPECT_GE(s2.lo, s1.lo);
        EXPECT_GE(s2.hi, s1.hi);
        if (r.state == model_->state_id("S2")) EXPECT_EQ(r.bounds.at("R3").bounds, s2);
    }
}

// Upper tail P(X >= k) and lower tail P(X <= k) of Binomial(n, p) by direct summation.
double binomial_tail(std::uint64_t n, std::uint64_t k, double p, bool upper) {
    double total = 0;
    std::uint64_t from = upper ? k : 0;
    std::uint64_t to = upper ? n : k;
    for (std::uint64_t i = from; i <= to; ++i) {
        double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                          static_cast<double>(i) * std::log(p) + static_cast<double>(n - i) * std::log1p(-p);
        total += std::exp(log_term);
    }
    return total;
}

TEST(ConflictTest, MatchesDirectTailSummation) {
    Gen g(77);
    int decided = 0;
    for (int i = 0; i < 300; ++i) {
        std::uint64_t n = static_cast<std::uint64_t>(g.range(1, 400));
        std::uint64_t k = static_cast<std::uint64_t>(g.range(0, static_cast<long>(n)));
        Rational lo = g.rational(ratio(1, 100), ratio(1, 2), 8);
        Rational hi = lo + g.rational(0, ratio(1, 4), 8);
        double alpha = 0.01;
        Rational freq = ratio(static_cast<long>(k), static_cast<long>(n));
        double tail = 1;
        if (freq < lo) tail = binomial_tail(n, k, to_double(lo), false);
        if (freq > hi) tail = binomial_tail(n, k, to_double(hi), true);
        if (std::abs(tail - alpha) < 1e-6) continue;
        EXPECT_EQ(conflict_significant(n, k, {lo, hi}, alpha), tail < alpha) << n << ' ' << k;
        decided += tail < alpha;
    }
    EXPECT_GT(decided, 10);
}

TEST(ConflictTest, RawFlagsSurviveAtAlphaOne) {
    EXPECT_FALSE(conflict_significant(1000, 0, {ratio(1, 1000), ratio(1, 100)}, 0.01));
    EXPECT_TRUE(conflict_significant(1000, 0, {ratio(1, 1000), ratio(1, 100)}, 1));
    EXPECT_FALSE(conflict_significant(1000, 5, {ratio(1, 1000), ratio(1, 100)}, 1));
    EXPECT_FALSE(conflict_significant(0, 0, {ratio(1, 10), ratio(1, 5)}, 1));
}

TEST(ConflictTracker, PersistenceAndQuorum) {
    MonitorConfig config;
    config.window = 3;
    std::map<StateId, std::vector<ParamName>> groups{{StateId{0}, {"a", "b"}}, {StateId{3}, {"v", "w"}}};
    ConflictTracker t(groups, config);
    for (int i = 0; i < 2; ++i) t.update("v", true, true, ratio(1, 10));
    EXPECT_EQ(t.classify(2).classification, ConflictClass::None);
    t.update("v", true, true, ratio(1, 10));
    ConflictReport r = t.classify(3);
    EXPECT_EQ(r.classification, ConflictClass::KnownUnknown);
    EXPECT_EQ(r.known_unknowns, std::vector<ParamName>{"v"});

    // A non-significant update resets the streak.
    t.update("v", true, false, ratio(1, 10));
    EXPECT_EQ(t.classify(4).classification, ConflictClass::None);

    for (int i = 0; i < 3; ++i) {
        t.update("a", true, true, ratio(1, 10));
        t.update("b", true, true, ratio(1, 10));
    }
    r = t.classify(10);
    EXPECT_EQ(r.classification, ConflictClass::UnknownUnknown);
    EXPECT_EQ(r.unknown_unknowns, (std::vector<ParamName>{"a", "b"}));
    EXPECT_TRUE(r.known_unknowns.empty());
}

TEST(ConflictTracker, WidthSlopeIsLeastSquares) {
    MonitorConfig config;
    config.window = 4;
    ConflictTracker t({{StateId{0}, {"a"}}}, config);
    for (int w : {10, 8, 6, 4, 2}) t.update("a", false, false, Rational(w));
    EXPECT_DOUBLE_EQ(t.classify(5).width_slope.at("a"), -2.0);
}

TEST_F(UuvMonitor, NominalRunsStayQuiet) {
    MonitorConfig config;
    std::size_t quiet = 0;
    std::size_t total = 0;
    for (std::uint64_t seed = 1001; seed < 1006; ++seed) {
        Monitor mon = make(config);
        for (const auto& r : replay(mon, nominal(seed))) {
            if (r.step <= config.window) continue;
            ++total;
            quiet += r.conflict.classification == ConflictClass::None;
        }
    }
    EXPECT_GE(static_cast<double>(quiet), 0.95 * static_cast<double>(total));
}

TEST_F(UuvMonitor, DriftedParameterRaisesKnownUnknown) {
    MonitorConfig config;
    Valuation truth = testing::uuv_truth();
    truth["v"] = ratio(4, 5);
    Mission mission = longest_mission(*model_, testing::uuv_ground_truth(truth), Rational(3, 4), 20, 2001, 50);
    Monitor mon = make(config);
    std::size_t s4_visits = 0;
    bool raised = false;
    for (const auto& e : mission.events) {
        StepRecord r = mon.ingest(e);
        s4_visits += e.from == model_->state_id("S4");
        const auto& ku = r.conflict.known_unknowns;
        if (std::find(ku.begin(), ku.end(), "v") != ku.end()) {
            raised = true;
            break;
        }
    }
    EXPECT_TRUE(raised);
    EXPECT_LE(s4_visits, 3 * config.window);
}

TEST_F(UuvMonitor, MislabelRaisesUnknownUnknownOverS1Rows) {
    Mission mission = inject_mislabel(*model_, nominal(3001), {"S4", "S1", 1, 1500}, 5);
    Monitor mon = make();
    std::set<ParamName> flagged;
    for (const auto& r : replay(mon, mission)) {
        if (r.conflict.classification == ConflictClass::UnknownUnknown) {
            flagged.insert(r.conflict.unknown_unknowns.begin(), r.conflict.unknown_unknowns.end());
        }
    }
    EXPECT_EQ(flagged, (std::set<ParamName>{"a1", "a2", "b1", "b2"}));
}

}  // namespace
}  // namespace pmca
