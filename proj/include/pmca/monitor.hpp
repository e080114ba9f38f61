#pragma once

// Pre-mission verification and the runtime monitor: per-parameter estimators fed by observed
// transitions, substitution-only re-verification of every query from the current state via a
// closed-form cache, threshold verdicts, and prior-data conflict classification.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "pmca/dtmc.hpp"
#include "pmca/estimators.hpp"
#include "pmca/paramcheck.hpp"
#include "pmca/simulator.hpp"

namespace pmca {

/// Dirichlet prior on the binomial marginal of one transition.
struct PointPrior {
    Rational pseudo_count;
    Rational expectation;

    friend bool operator==(const PointPrior&, const PointPrior&) = default;
};

/// CBI prior plus the failure-free transitions already absorbed into it.
struct CbiPriorSpec {
    CbiPrior prior;
    std::uint64_t previous_count = 0;

    friend bool operator==(const CbiPriorSpec&, const CbiPriorSpec&) = default;
};

using PriorSpec = std::variant<PointPrior, ImprecisePrior, CbiPriorSpec>;
using PriorTable = std::map<ParamName, PriorSpec, std::less<>>;

enum class Direction { AtLeast, AtMost };

struct Threshold {
    Direction direction = Direction::AtLeast;
    Rational value;

    friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct QuerySpec {
    ReachQuery query;          // pre-mission form, evaluated from query.initial
    std::string runtime_id;    // name used for runtime verdicts and series columns
    std::optional<Threshold> threshold;

    friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

std::string to_string(Direction d);
Direction parse_direction(std::string_view text);

/// One closed form per (query, initial state), with monotonicity analyzed over `analyzed_box`.
struct ClosedFormCache {
    std::string model_hash;
    ParamBox analyzed_box;
    std::map<std::string, std::vector<ClosedForm>> forms;  // query id -> indexed by StateId

    const ClosedForm& at(const std::string& query_id, StateId state) const;
};

/// Runs one elimination per query and state, then monotonicity analysis over the declared box.
ClosedFormCache build_cache(const Dtmc& m, const std::vector<QuerySpec>& queries, std::string model_hash);

enum class CbiBoxMode { Range, Point };  // [0, bound] or the point bound

enum class EstimatorKind { Point, Interval, Cbi };

struct ParamEstimate {
    EstimatorKind kind = EstimatorKind::Interval;
    Interval bounds;          // what enters the verification box
    bool conflict = false;    // raw prior-data conflict flag (interval estimator only)
    std::uint64_t sample_size = 0;
    std::uint64_t hits = 0;   // observed transitions along the parameter's edge

    friend bool operator==(const ParamEstimate&, const ParamEstimate&) = default;
};

/// Throws ValidationError when a parameter lacks a prior, a prior names an unknown parameter,
/// a parameter is not a bare per-action probability, or the estimator does not match the
/// destination layer (CBI exactly for edges into catastrophic failure states).
void check_priors(const Dtmc& m, const PriorTable& priors);

/// Counts feeding one parameter: (row total, hits) pooled over every (state, action) site.
std::pair<std::uint64_t, std::uint64_t> parameter_counts(const std::vector<ParameterSite>& sites,
                                                         const CountTable& counts);
std::pair<std::uint64_t, std::uint64_t> parameter_counts(const Dtmc& m, const ParamName& name, const CountTable& counts);

/// Current estimate of one parameter. Throws CbiRegimeViolated on an observed catastrophic transition.
ParamEstimate estimate_parameter(const Dtmc& m, const ParamName& name, const PriorSpec& prior, const CountTable& counts,
                                 CbiBoxMode mode = CbiBoxMode::Range);
ParamEstimate estimate_parameter(const ParamName& name, const std::vector<ParameterSite>& sites, const PriorSpec& prior,
                                 const CountTable& counts, CbiBoxMode mode = CbiBoxMode::Range);

struct PremissionReport {
    std::map<ParamName, ParamEstimate> estimates;
    ParamBox box;
    std::map<std::string, BoundResult> bounds;  // by query id, from each query's own initial state
};

PremissionReport premission_verify(const Dtmc& m, const PriorTable& priors, const CountTable& previous,
                                   const std::vector<QuerySpec>& queries, const ClosedFormCache& cache,
                                   CbiBoxMode mode = CbiBoxMode::Range);

/// Priors for the runtime phase: interval expectations become the pre-mission posterior
/// interval (pseudo-counts kept), point priors take the Dirichlet posterior, and CBI priors
/// absorb the previous failure-free count.
PriorTable runtime_priors(const Dtmc& m, const PriorTable& priors, const CountTable& previous);

enum class VerdictStatus { Satisfied, Violated, Indeterminate, Reported };
enum class ActionHint { Continue, Abort, Restart };

std::string to_string(VerdictStatus s);
std::string to_string(ActionHint h);

struct Verdict {
    std::uint64_t step = 0;
    std::string query;
    Interval bounds;
    bool conservative = false;
    VerdictStatus status = VerdictStatus::Reported;
    ActionHint hint = ActionHint::Continue;
};

/// Satisfied iff the whole interval clears the threshold, Violated iff the whole interval
/// fails it, Indeterminate otherwise; Reported without a threshold. A violated query whose
/// targets are all catastrophic failures hints Abort, any other violation Restart.
Verdict make_verdict(const Dtmc& m, const QuerySpec& q, std::uint64_t step, const BoundResult& bounds);

enum class ConflictClass { None, KnownUnknown, UnknownUnknown };
std::string to_string(ConflictClass c);

struct ConflictReport {
    std::uint64_t step = 0;
    std::map<ParamName, bool> raw;          // frequency outside the prior expectation interval
    std::map<ParamName, bool> significant;  // raw and rejected by the binomial tail test
    std::map<ParamName, std::size_t> streak;  // consecutive row updates with a significant flag
    std::map<ParamName, double> width_slope;  // least-squares slope of interval width over the window
    ConflictClass classification = ConflictClass::None;
    std::vector<ParamName> unknown_unknowns;
    std::vector<ParamName> known_unknowns;
};

struct MonitorConfig {
    std::size_t window = 10;   // persistence window W, in row updates
    double alpha = 0.01;       // significance level of the conflict test; 1 keeps every raw flag
    std::size_t quorum = 0;    // parameters of one state that must persist together; 0 means all
    CbiBoxMode cbi_box = CbiBoxMode::Range;
};

/// One-sided binomial tail test: true if k successes in n trials reject every success
/// probability in [p_lo, p_hi] at level alpha.
bool conflict_significant(std::uint64_t n, std::uint64_t k, const Interval& expectation, double alpha);

/// Tracks conflict persistence per parameter and classifies the pattern.
class ConflictTracker {
  public:
    ConflictTracker() = default;
    /// `groups`: per state, the interval-estimated parameters of its action rows.
    ConflictTracker(std::map<StateId, std::vector<ParamName>> groups, MonitorConfig config);

    /// Records one update of a parameter's row.
    void update(const ParamName& name, bool raw, bool significant, const Rational& width);
    ConflictReport classify(std::uint64_t step) const;

  private:
    struct Track {
        bool raw = false;
        bool significant = false;
        std::size_t streak = 0;
        std::deque<double> widths;
    };
    std::map<StateId, std::vector<ParamName>> groups_;
    MonitorConfig config_;
    std::map<ParamName, Track> tracks_;
};

struct StepRecord {
    std::uint64_t step = 0;
    StateId state;
    std::map<ParamName, ParamEstimate> estimates;
    std::map<std::string, BoundResult> bounds;  // by runtime id
    std::vector<Verdict> verdicts;
    ConflictReport conflict;
    std::vector<ParamName> regime_violations;  // CBI parameters whose catastrophic edge has been observed
};

class Monitor {
  public:
    /// `priors` are the runtime priors; the cache must hold every query for every state.
    Monitor(Dtmc model, PriorTable priors, std::vector<QuerySpec> queries, ClosedFormCache cache,
            MonitorConfig config = {});

    /// Row 0: estimates and bounds before any runtime data, from the initial state.
    StepRecord initial_record();

    /// Applies one observed transition. Throws ChainError if the event does not start at the
    /// current state or names an action the state lacks. A transition along a CBI-estimated
    /// catastrophic edge freezes that parameter's bound and lists it in regime_violations.
    StepRecord ingest(const TraceEvent& event);

    StateId current() const { return current_; }
    const CountTable& counts() const { return counts_; }
    const std::vector<QuerySpec>& queries() const { return queries_; }
    const Dtmc& model() const { return model_; }

  private:
    StepRecord record(std::uint64_t step);
    BoundResult bound(const std::string& query_id, StateId state, const ParamBox& box);

    Dtmc model_;
    PriorTable priors_;
    std::vector<QuerySpec> queries_;
    ClosedFormCache cache_;
    MonitorConfig config_;
    std::map<ParamName, std::vector<ParameterSite>> sites_;
    std::map<std::pair<std::string, std::string>, std::vector<ParamName>> row_parameters_;  // (state, action)
    std::map<ParamName, ParamEstimate> estimates_;
    std::set<ParamName> regime_violations_;
    ConflictTracker tracker_;
    ConflictReport last_conflict_;
    CountTable counts_;
    StateId current_;
    std::uint64_t step_ = 0;
    // Monotonicity re-analysed on demand when the runtime box leaves the cached box.
    std::map<std::pair<std::string, std::uint32_t>, std::pair<ParamBox, ClosedForm>> reanalysed_;
};

/// Replays a whole mission: row 0 followed by one record per event.
std::vector<StepRecord> replay(Monitor& monitor, const Mission& mission);

}  // namespace pmca
