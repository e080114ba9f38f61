#pragma once

// Parametric DTMC data model. A model is a list of states with labels and layer tags,
// per-state action rows weighted by a fixed policy, and the induced transition rows
// obtained by mixing the action rows with the policy weights.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "pmca/interval.hpp"
#include "pmca/ratfunc.hpp"

namespace pmca {

struct StateId {
    std::uint32_t index = 0;  // position in Dtmc::states

    friend auto operator<=>(const StateId&, const StateId&) = default;
};

enum class Layer { Normal, Unsafe, Failure };

struct LayerTag {
    Layer layer = Layer::Normal;
    bool catastrophic = false;  // only meaningful for Failure

    friend bool operator==(const LayerTag&, const LayerTag&) = default;
};

struct State {
    std::string name;
    std::set<std::string> labels;
    LayerTag tag;

    friend bool operator==(const State&, const State&) = default;
};

struct Constant {
    Rational value;
    friend bool operator==(const Constant&, const Constant&) = default;
};

struct Param {
    ParamName name;
    friend bool operator==(const Param&, const Param&) = default;
};

/// constant + sum of weight * parameter; the policy-weighted mix of per-action probabilities.
struct PolicyMix {
    Rational constant;
    std::vector<std::pair<Rational, ParamName>> terms;
    friend bool operator==(const PolicyMix&, const PolicyMix&) = default;
};

/// The remainder of its row: 1 minus every sibling entry.
struct Complement {
    friend bool operator==(const Complement&, const Complement&) = default;
};

using TransitionExpr = std::variant<Constant, Param, PolicyMix, Complement>;
using ActionProbability = std::variant<Constant, Param>;
using Row = std::map<StateId, TransitionExpr>;

/// One action available in a state: its policy weight and its destination distribution.
struct ActionRow {
    std::string action;
    Rational weight;
    Row row;

    friend bool operator==(const ActionRow&, const ActionRow&) = default;
};

/// A (state, action, destination) slot holding a bare parameter.
struct ParameterSite {
    StateId state;
    std::string action;
    StateId destination;

    friend bool operator==(const ParameterSite&, const ParameterSite&) = default;
};

class Dtmc {
  public:
    Dtmc() = default;

    /// Builds the induced rows from per-state action rows. Throws ValidationError when
    /// policy weights do not sum to 1 or a row would need more than one complement entry.
    Dtmc(std::vector<State> states, StateId initial, std::vector<std::vector<ActionRow>> actions,
         ParamBox parameters);

    /// Builds a model directly from induced rows (single implicit action per state).
    static Dtmc from_rows(std::vector<State> states, StateId initial, std::vector<Row> rows, ParamBox parameters);

    const std::vector<State>& states() const { return states_; }
    const State& state(StateId id) const { return states_.at(id.index); }
    std::size_t size() const { return states_.size(); }
    StateId initial() const { return initial_; }
    const std::vector<Row>& rows() const { return rows_; }
    const Row& row(StateId id) const { return rows_.at(id.index); }
    const std::vector<ActionRow>& actions(StateId id) const { return actions_.at(id.index); }
    const std::vector<std::vector<ActionRow>>& all_actions() const { return actions_; }
    /// Declared parameter ranges.
    const ParamBox& parameters() const { return parameters_; }

    std::optional<StateId> find_state(std::string_view name) const;
    StateId state_id(std::string_view name) const;  // throws ValidationError if unknown
    std::vector<StateId> states_with_label(std::string_view label) const;
    /// True if the only transition is a constant self-loop of probability 1.
    bool is_absorbing(StateId id) const;
    /// Where each parameter appears as a bare per-action probability.
    std::map<ParamName, std::vector<ParameterSite>> parameter_sites() const;

    Dtmc with_initial(StateId initial) const;

    friend bool operator==(const Dtmc&, const Dtmc&) = default;

  private:
    std::vector<State> states_;
    StateId initial_;
    std::vector<std::vector<ActionRow>> actions_;
    std::vector<Row> rows_;
    ParamBox parameters_;
};

/// Mixes per-action probabilities with policy weights: sum_a weight_a * prob_a.
/// Throws ValidationError on an empty policy, mismatched lengths or weights not summing to 1.
TransitionExpr induce_transition(const std::vector<std::pair<std::string, Rational>>& policy,
                                 const std::vector<ActionProbability>& per_action_probs);

/// Renders a transition expression; Complement entries are not expressible alone.
RationalFunction to_rational_function(const TransitionExpr& expr);
std::string to_string(const TransitionExpr& expr);

enum class ViolationKind { MissingInitial, UndeclaredParameter, ComplementCount, RowSum, EntryRange, NotAbsorbing };

struct Violation {
    ViolationKind kind;
    std::optional<StateId> state;
    std::string message;
};

std::string to_string(ViolationKind kind);

/// Box corners plus midpoint of the declared parameter ranges (midpoint only past 12 parameters,
/// with the all-lower and all-upper corners).
std::vector<Valuation> default_reference_valuations(const Dtmc& m);

/// Structural and stochastic checks at each reference valuation. Empty result means valid.
std::vector<Violation> validate(const Dtmc& m, const std::vector<Valuation>& reference_valuations);
std::vector<Violation> validate(const Dtmc& m);

using ParametricMatrix = std::vector<std::map<StateId, RationalFunction>>;

/// Each row rendered as rational functions with Complement expanded to 1 minus its siblings.
/// Throws ValidationError if the model does not validate.
ParametricMatrix to_parametric_matrix(const Dtmc& m);

/// Same rendering without running validation first (internal use by validate itself).
ParametricMatrix render_rows(const Dtmc& m);

}  // namespace pmca
