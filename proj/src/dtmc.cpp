#include "pmca/dtmc.hpp"

#include <algorithm>

#include "pmca/error.hpp"

namespace pmca {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<Row> induce_rows(const std::vector<State>& states, const std::vector<std::vector<ActionRow>>& actions) {
    std::vector<Row> rows(states.size());
    for (std::size_t s = 0; s < states.size(); ++s) {
        const auto& acts = actions[s];
        if (acts.empty()) throw ValidationError("state '" + states[s].name + "' has no actions");
        std::vector<std::pair<std::string, Rational>> policy;
        for (const auto& a : acts) policy.emplace_back(a.action, a.weight);

        std::set<StateId> destinations;
        std::set<StateId> complemented;
        for (const auto& a : acts) {
            int complements = 0;
            for (const auto& [dest, expr] : a.row) {
                destinations.insert(dest);
                if (std::holds_alternative<Complement>(expr)) {
                    complemented.insert(dest);
                    ++complements;
                } else if (std::holds_alternative<PolicyMix>(expr)) {
                    throw ValidationError("state '" + states[s].name + "' action '" + a.action +
                                          "': per-action probabilities must be constants or parameters");
                }
            }
            if (complements > 1) {
                throw ValidationError("state '" + states[s].name + "' action '" + a.action +
                                      "' has more than one remainder entry");
            }
        }
        if (complemented.size() > 1) {
            throw ValidationError("state '" + states[s].name +
                                  "': actions complete their rows into different destinations");
        }

        Row row;
        for (StateId dest : destinations) {
            if (complemented.count(dest)) {
                row.emplace(dest, Complement{});
                continue;
            }
            std::vector<ActionProbability> probs;
            for (const auto& a : acts) {
                auto it = a.row.find(dest);
                if (it == a.row.end()) {
                    probs.emplace_back(Constant{0});
                } else if (const auto* c = std::get_if<Constant>(&it->second)) {
                    probs.emplace_back(*c);
                } else {
                    probs.emplace_back(std::get<Param>(it->second));
                }
            }
            row.emplace(dest, induce_transition(policy, probs));
        }
        rows[s] = std::move(row);
    }
    return rows;
}

}  // namespace

Dtmc::Dtmc(std::vector<State> states, StateId initial, std::vector<std::vector<ActionRow>> actions,
           ParamBox parameters)
    : states_(std::move(states)), initial_(initial), actions_(std::move(actions)), parameters_(std::move(parameters)) {
    if (actions_.size() != states_.size()) throw ValidationError("one action list per state is required");
    rows_ = induce_rows(states_, actions_);
}

Dtmc Dtmc::from_rows(std::vector<State> states, StateId initial, std::vector<Row> rows, ParamBox parameters) {
    if (rows.size() != states.size()) throw ValidationError("one row per state is required");
    bool mixed = std::any_of(rows.begin(), rows.end(), [](const Row& row) {
        return std::any_of(row.begin(), row.end(),
                           [](const auto& entry) { return std::holds_alternative<PolicyMix>(entry.second); });
    });
    if (mixed) {
        // Mixed rows have no single-action view; keep the induced rows only.
        Dtmc m;
        m.states_ = std::move(states);
        m.initial_ = initial;
        m.rows_ = std::move(rows);
        m.parameters_ = std::move(parameters);
        m.actions_.assign(m.states_.size(), {});
        return m;
    }
    std::vector<std::vector<ActionRow>> actions(states.size());
    for (std::size_t s = 0; s < rows.size(); ++s) actions[s].push_back(ActionRow{"-", Rational(1), rows[s]});
    return Dtmc(std::move(states), initial, std::move(actions), std::move(parameters));
}

std::optional<StateId> Dtmc::find_state(std::string_view name) const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i].name == name) return StateId{static_cast<std::uint32_t>(i)};
    }
    return std::nullopt;
}

StateId Dtmc::state_id(std::string_view name) const {
    if (auto id = find_state(name)) return *id;
    throw ValidationError("unknown state '" + std::string(name) + "'");
}

std::vector<StateId> Dtmc::states_with_label(std::string_view label) const {
    std::vector<StateId> out;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i].labels.count(std::string(label))) out.push_back(StateId{static_cast<std::uint32_t>(i)});
    }
    return out;
}

bool Dtmc::is_absorbing(StateId id) const {
    const Row& r = row(id);
    if (r.size() != 1 || r.begin()->first != id) return false;
    const auto& expr = r.begin()->second;
    if (std::holds_alternative<Complement>(expr)) return true;
    if (const auto* c = std::get_if<Constant>(&expr)) return c->value == 1;
    return false;
}

std::map<ParamName, std::vector<ParameterSite>> Dtmc::parameter_sites() const {
    std::map<ParamName, std::vector<ParameterSite>> out;
    for (std::size_t s = 0; s < actions_.size(); ++s) {
        for (const auto& a : actions_[s]) {
            for (const auto& [dest, expr] : a.row) {
                if (const auto* p = std::get_if<Param>(&expr)) {
                    out[p->name].push_back({StateId{static_cast<std::uint32_t>(s)}, a.action, dest});
                }
            }
        }
    }
    return out;
}

Dtmc Dtmc::with_initial(StateId initial) const {
    Dtmc copy = *this;
    copy.initial_ = initial;
    return copy;
}

TransitionExpr induce_transition(const std::vector<std::pair<std::string, Rational>>& policy,
                                 const std::vector<ActionProbability>& per_action_probs) {
    if (policy.empty()) throw ValidationError("policy has no actions");
    if (policy.size() != per_action_probs.size()) {
        throw ValidationError("policy and per-action probability lists differ in length");
    }
    Rational total = 0;
    for (const auto& [action, w] : policy) {
        if (sgn(w) < 0) throw ValidationError("negative policy weight for action '" + action + "'");
        total += w;
    }
    if (total != 1) throw ValidationError("policy weights sum to " + to_fraction_string(total) + ", not 1");

    PolicyMix mix;
    mix.constant = 0;
    std::map<ParamName, Rational> weights;
    for (std::size_t i = 0; i < policy.size(); ++i) {
        const Rational& w = policy[i].second;
        std::visit(overloaded{[&](const Constant& c) { mix.constant += w * c.value; },
                              [&](const Param& p) {
                                  if (!is_zero(w)) weights[p.name] += w;
                              }},
                   per_action_probs[i]);
    }
    for (auto& [name, w] : weights) mix.terms.emplace_back(w, name);

    if (mix.terms.empty()) return Constant{mix.constant};
    if (mix.terms.size() == 1 && is_zero(mix.constant) && mix.terms.front().first == 1) {
        return Param{mix.terms.front().second};
    }
    return mix;
}

RationalFunction to_rational_function(const TransitionExpr& expr) {
    return std::visit(overloaded{[](const Constant& c) { return RationalFunction(c.value); },
                                 [](const Param& p) { return RationalFunction::variable(p.name); },
                                 [](const PolicyMix& mix) {
                                     Polynomial poly(mix.constant);
                                     for (const auto& [w, name] : mix.terms) {
                                         poly += Polynomial::term(w, Monomial::variable(name));
                                     }
                                     return RationalFunction(poly);
                                 },
                                 [](const Complement&) -> RationalFunction {
                                     throw ValidationError("a remainder entry has no value outside its row");
                                 }},
                      expr);
}

std::string to_string(const TransitionExpr& expr) {
    if (std::holds_alternative<Complement>(expr)) return "rest";
    return to_rational_function(expr).to_string();
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::MissingInitial:
            return "missing-initial";
        case ViolationKind::UndeclaredParameter:
            return "undeclared-parameter";
        case ViolationKind::ComplementCount:
            return "remainder-count";
        case ViolationKind::RowSum:
            return "row-sum";
        case ViolationKind::EntryRange:
            return "entry-range";
        case ViolationKind::NotAbsorbing:
            return "not-absorbing";
    }
    return "unknown";
}

ParametricMatrix render_rows(const Dtmc& m) {
    ParametricMatrix out(m.size());
    for (std::size_t s = 0; s < m.size(); ++s) {
        const Row& row = m.rows()[s];
        std::optional<StateId> rest;
        RationalFunction siblings(0);
        for (const auto& [dest, expr] : row) {
            if (std::holds_alternative<Complement>(expr)) {
                if (rest) throw ValidationError("state '" + m.states()[s].name + "' has more than one remainder entry");
                rest = dest;
                continue;
            }
            RationalFunction f = to_rational_function(expr);
            siblings = siblings + f;
            if (!f.is_zero()) out[s].emplace(dest, std::move(f));
        }
        if (rest) {
            RationalFunction remainder = RationalFunction(1) - siblings;
            if (!remainder.is_zero()) out[s].emplace(*rest, std::move(remainder));
        }
    }
    return out;
}

std::vector<Valuation> default_reference_valuations(const Dtmc& m) {
    const ParamBox& box = m.parameters();
    std::vector<Valuation> out;
    out.push_back(box_midpoint(box));
    std::vector<const std::pair<const ParamName, Interval>*> entries;
    for (const auto& e : box) entries.push_back(&e);
    if (entries.size() <= 12) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << entries.size()); ++mask) {
            Valuation v;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                v.emplace(entries[i]->first, (mask >> i) & 1 ? entries[i]->second.hi : entries[i]->second.lo);
            }
            out.push_back(std::move(v));
        }
    } else {
        Valuation lo;
        Valuation hi;
        for (const auto* e : entries) {
            lo.emplace(e->first, e->second.lo);
            hi.emplace(e->first, e->second.hi);
        }
        out.push_back(std::move(lo));
        out.push_back(std::move(hi));
    }
    return out;
}

std::vector<Violation> validate(const Dtmc& m, const std::vector<Valuation>& reference_valuations) {
    std::vector<Violation> out;
    if (m.initial().index >= m.size()) {
        out.push_back({ViolationKind::MissingInitial, std::nullopt, "initial state does not exist"});
        return out;
    }

    bool structural_ok = true;
    for (std::size_t s = 0; s < m.size(); ++s) {
        StateId id{static_cast<std::uint32_t>(s)};
        const Row& row = m.rows()[s];
        int complements = 0;
        for (const auto& [dest, expr] : row) {
            if (dest.index >= m.size()) {
                out.push_back({ViolationKind::MissingInitial, id, "transition into a nonexistent state"});
                structural_ok = false;
            }
            if (std::holds_alternative<Complement>(expr)) {
                ++complements;
                continue;
            }
            for (const auto& p : to_rational_function(expr).parameters()) {
                if (!m.parameters().count(p)) {
                    out.push_back({ViolationKind::UndeclaredParameter, id, "parameter '" + p + "' is not declared"});
                    structural_ok = false;
                }
            }
        }
        if (complements > 1) {
            out.push_back({ViolationKind::ComplementCount, id, "more than one remainder entry"});
            structural_ok = false;
        }
        const State& st = m.states()[s];
        if (st.tag.layer == Layer::Failure && !m.is_absorbing(id)) {
            out.push_back({ViolationKind::NotAbsorbing, id, "failure state '" + st.name + "' is not absorbing"});
        }
    }
    if (!structural_ok) return out;

    ParametricMatrix matrix = render_rows(m);
    for (std::size_t s = 0; s < m.size(); ++s) {
        StateId id{static_cast<std::uint32_t>(s)};
        const std::string& name = m.states()[s].name;
        bool sum_reported = false;
        bool range_reported = false;
        for (const auto& valuation : reference_valuations) {
            Rational sum = 0;
            for (const auto& [dest, f] : matrix[s]) {
                Rational p = f.evaluate(valuation);
                sum += p;
                if (!range_reported && (sgn(p) < 0 || p > 1)) {
                    out.push_back({ViolationKind::EntryRange, id,
                                   "entry " + name + "->" + m.states()[dest.index].name + " evaluates to " +
                                       to_decimal_string(p) + " outside [0,1]"});
                    range_reported = true;
                }
            }
            if (!sum_reported && sum != 1) {
                out.push_back({ViolationKind::RowSum, id,
                               "row of state '" + name + "' sums to " + to_decimal_string(sum) + ", not 1"});
                sum_reported = true;
            }
        }
    }
    return out;
}

std::vector<Violation> validate(const Dtmc& m) { return validate(m, default_reference_valuations(m)); }

ParametricMatrix to_parametric_matrix(const Dtmc& m) {
    auto violations = validate(m);
    if (!violations.empty()) throw ValidationError("model does not validate: " + violations.front().message);
    return render_rows(m);
}

}  // namespace pmca
