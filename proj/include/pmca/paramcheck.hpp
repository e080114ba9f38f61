#pragma once

// Parametric model checking: closed-form reachability by state elimination, Next and
// bounded-Until evaluation, monotonicity analysis and interval bounds over parameter boxes.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmca/dtmc.hpp"
#include "pmca/error.hpp"
#include "pmca/interval.hpp"
#include "pmca/ratfunc.hpp"

namespace pmca {

enum class QueryForm { UnboundedUntil, BoundedUntil, Next };

/// P=? [ constraint U target ], P=? [ constraint U<=bound target ] or P=? [ X target ].
struct ReachQuery {
    std::string id;
    StateId initial;
    std::string target_label;
    QueryForm form = QueryForm::UnboundedUntil;
    std::optional<std::string> constraint_label;  // absent means `true`
    unsigned bound = 0;                           // BoundedUntil only

    friend bool operator==(const ReachQuery&, const ReachQuery&) = default;
};

enum class Monotonicity { Increasing, Decreasing, Constant, Indeterminate };

std::string to_string(QueryForm form);
std::string to_string(Monotonicity m);
QueryForm parse_query_form(std::string_view text);
Monotonicity parse_monotonicity(std::string_view text);

struct ClosedForm {
    ReachQuery query;
    RationalFunction function;
    std::map<ParamName, Monotonicity> monotonicity;  // filled by analyze_monotonicity
    std::vector<std::string> warnings;
};

/// Raised when a denominator cannot be shown nonzero over a box.
class SingularAtBoundary : public EvaluationError {
  public:
    using EvaluationError::EvaluationError;
};

/// Closed-form probability of `constraint U target` from query.initial. Eliminates
/// intermediate states fewest-incident-transitions first with fraction-free updates.
/// A label matching no state yields the zero function with a warning.
ClosedForm eliminate(const Dtmc& m, const ReachQuery& query);

/// Number of eliminate() calls made by this process; lets callers assert that a code path
/// performs substitutions only.
std::uint64_t elimination_count();

/// Sum of the initial state's transition functions into target-labelled states.
ClosedForm check_next(const Dtmc& m, const ReachQuery& query);

/// Dispatches to eliminate or check_next. Bounded until has no closed form here.
ClosedForm closed_form(const Dtmc& m, const ReachQuery& query);

/// Bounded until by `bound` steps of backward iteration on the concrete chain at `valuation`.
/// Throws EvaluationError if the valuation leaves the declared parameter box.
Rational check_bounded(const Dtmc& m, const ReachQuery& query, const Valuation& valuation);

/// Labels each parameter of the function by the provable sign of its partial derivative over `box`.
/// Throws SingularAtBoundary if the denominator may vanish inside the box.
ClosedForm analyze_monotonicity(ClosedForm cf, const ParamBox& box);

struct BoundResult {
    Interval bounds;
    bool exact = true;          // corner evaluations only
    bool conservative = false;  // grid-refinement enclosure (outward rounded)
};

/// [min, max] of the function over the box. Monotone/constant parameters are resolved at
/// box corners; Indeterminate parameters trigger adaptive bisection to depth 8 with a
/// derivative-bound outward rounding on leaf cells. Monotonicity must already be analyzed
/// over a box that contains `box`; otherwise it is re-analyzed on `box`.
BoundResult bound_evaluate(const ClosedForm& cf, const ParamBox& box, const ParamBox& analyzed_box);
BoundResult bound_evaluate(const ClosedForm& cf, const ParamBox& box);

// Enclosures used by the monotonicity and bounding machinery; exposed for testing.

/// Guaranteed enclosure of the polynomial's range over the box: exact corner enumeration for
/// parameters of degree <= 1, interval arithmetic for the rest.
Interval range_enclosure(const Polynomial& p, const ParamBox& box);

enum class Sign { Positive, Negative, NonNegative, NonPositive, Zero, Mixed };

/// Sign of the polynomial over the box, refining by bisection up to `max_depth` splits.
Sign polynomial_sign(const Polynomial& p, const ParamBox& box, int max_depth = 12);

}  // namespace pmca
