#include "pmca/simulator.hpp"

#include <algorithm>

#include "pmca/error.hpp"

namespace pmca {

namespace {

/// Policy and per-action destination distributions of one state, in doubles for sampling.
struct SamplingRow {
    std::vector<std::string> actions;
    std::vector<double> weights;
    std::vector<std::vector<std::pair<StateId, double>>> destinations;
};

Rational entry_value(const TransitionExpr& e, const Valuation& v) {
    if (const auto* c = std::get_if<Constant>(&e)) return c->value;
    if (const auto* p = std::get_if<Param>(&e)) {
        auto it = v.find(p->name);
        if (it == v.end()) throw ValidationError("truth leaves parameter '" + p->name + "' unbound");
        return it->second;
    }
    return to_rational_function(e).evaluate(v);
}

std::vector<std::pair<StateId, Rational>> concrete_row(const Row& row, const Valuation& v, const std::string& where) {
    std::vector<std::pair<StateId, Rational>> out;
    Rational rest = 1;
    std::optional<StateId> complement;
    for (const auto& [dest, e] : row) {
        if (std::holds_alternative<Complement>(e)) {
            complement = dest;
            continue;
        }
        Rational p = entry_value(e, v);
        if (sgn(p) < 0 || p > 1) throw ValidationError(where + ": probability outside [0, 1] at the truth valuation");
        rest -= p;
        out.emplace_back(dest, p);
    }
    if (complement) {
        if (sgn(rest) < 0) throw ValidationError(where + ": remainder is negative at the truth valuation");
        out.emplace_back(*complement, rest);
    } else if (rest != 0) {
        throw ValidationError(where + ": row does not sum to 1 at the truth valuation");
    }
    return out;
}

std::vector<Rational> policy_weights(const Dtmc& m, std::size_t s, const GroundTruth& truth,
                                     const std::optional<Rational>& gamma) {
    const auto& acts = m.actions(StateId{static_cast<std::uint32_t>(s)});
    std::vector<Rational> w;
    for (const auto& a : acts) w.push_back(a.weight);
    if (!gamma || !truth.gamma_site || truth.gamma_site->state != m.states()[s].name) return w;
    if (sgn(*gamma) < 0 || *gamma > 1) throw ValidationError("gamma must lie in [0, 1]");
    auto it = std::find_if(acts.begin(), acts.end(), [&](const ActionRow& a) { return a.action == truth.gamma_site->action; });
    if (it == acts.end()) throw ValidationError("gamma action '" + truth.gamma_site->action + "' is not available");
    std::size_t k = static_cast<std::size_t>(it - acts.begin());
    Rational others = 1 - acts[k].weight;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i == k) {
            w[i] = *gamma;
        } else {
            w[i] = sgn(others) == 0 ? Rational(0) : acts[i].weight / others * (1 - *gamma);
        }
    }
    return w;
}

std::vector<SamplingRow> sampling_rows(const Dtmc& m, const GroundTruth& truth, const std::optional<Rational>& gamma) {
    if (truth.gamma_site) {
        auto s = m.find_state(truth.gamma_site->state);
        if (!s) throw ValidationError("gamma state '" + truth.gamma_site->state + "' is not in the model");
    }
    std::vector<SamplingRow> out(m.size());
    for (std::size_t s = 0; s < m.size(); ++s) {
        StateId id{static_cast<std::uint32_t>(s)};
        const std::string& name = m.states()[s].name;
        SamplingRow& r = out[s];
        const auto& acts = m.actions(id);
        if (acts.empty()) {
            r.actions.push_back("-");
            r.weights.push_back(1.0);
            std::vector<std::pair<StateId, double>> d;
            for (const auto& [dest, p] : concrete_row(m.row(id), truth.values, "state '" + name + "'")) {
                d.emplace_back(dest, to_double(p));
            }
            r.destinations.push_back(std::move(d));
            continue;
        }
        auto w = policy_weights(m, s, truth, gamma);
        for (std::size_t a = 0; a < acts.size(); ++a) {
            r.actions.push_back(acts[a].action);
            r.weights.push_back(to_double(w[a]));
            std::vector<std::pair<StateId, double>> d;
            for (const auto& [dest, p] :
                 concrete_row(acts[a].row, truth.values, "state '" + name + "' action '" + acts[a].action + "'")) {
                d.emplace_back(dest, to_double(p));
            }
            r.destinations.push_back(std::move(d));
        }
    }
    return out;
}

template <class T>
std::size_t sample_index(const std::vector<T>& items, double u, auto weight_of) {
    double acc = 0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        double w = weight_of(items[i]);
        if (w <= 0) continue;
        last = i;
        acc += w;
        if (u < acc) return i;
    }
    return last;  // rounding slack at the top end
}

std::size_t sample_action(const SamplingRow& r, std::mt19937_64& rng) {
    return sample_index(r.weights, uniform01(rng), [](double w) { return w; });
}

StateId sample_destination(const SamplingRow& r, std::size_t action, std::mt19937_64& rng) {
    const auto& d = r.destinations[action];
    return d[sample_index(d, uniform01(rng), [](const auto& e) { return e.second; })].first;
}

Rational gamma_draw(const Interval& range, std::mt19937_64& rng) {
    return range.lo + range.width() * from_double(uniform01(rng));
}

}  // namespace

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_truth(const Dtmc& m, const GroundTruth& truth, const std::optional<Rational>& gamma) {
    sampling_rows(m, truth, gamma);
}

Mission simulate_mission(const Dtmc& m, const GroundTruth& truth, std::optional<Rational> gamma, std::uint64_t seed,
                         std::uint32_t mission_id, std::uint64_t step_cap) {
    auto rows = sampling_rows(m, truth, gamma);
    std::mt19937_64 rng(seed);
    Mission mission;
    mission.id = mission_id;
    mission.gamma = truth.gamma_site ? gamma : std::nullopt;
    StateId current = m.initial();
    std::uint64_t step = 0;
    while (!m.is_absorbing(current)) {
        if (step >= step_cap) {
            mission.truncated = true;
            break;
        }
        const SamplingRow& r = rows[current.index];
        std::size_t a = sample_action(r, rng);
        StateId next = sample_destination(r, a, rng);
        mission.events.push_back({mission_id, ++step, current, r.actions[a], next});
        current = next;
    }
    mission.terminal = current;
    return mission;
}

Campaign generate_campaign(const Dtmc& m, const GroundTruth& truth, std::size_t n_missions, const Interval& gamma_range,
                           std::uint64_t seed, std::uint64_t step_cap) {
    if (sgn(gamma_range.lo) < 0 || gamma_range.hi > 1 || gamma_range.lo > gamma_range.hi) {
        throw ValidationError("gamma range must be a sub-interval of [0, 1]");
    }
    Campaign c;
    c.seed = seed;
    c.truth = truth.values;
    for (std::size_t i = 0; i < n_missions; ++i) {
        std::uint32_t id = static_cast<std::uint32_t>(i + 1);
        std::mt19937_64 gamma_rng(sub_seed(seed, 2 * i));
        std::optional<Rational> gamma;
        if (truth.gamma_site) gamma = gamma_range.is_point() ? gamma_range.lo : gamma_draw(gamma_range, gamma_rng);
        c.missions.push_back(simulate_mission(m, truth, gamma, sub_seed(seed, 2 * i + 1), id, step_cap));
    }
    return c;
}

const Mission& select_longest(const std::vector<Mission>& missions) {
    if (missions.empty()) throw ValidationError("no missions to select from");
    return *std::max_element(missions.begin(), missions.end(),
                             [](const Mission& a, const Mission& b) { return a.events.size() < b.events.size(); });
}

Mission longest_mission(const Dtmc& m, const GroundTruth& truth, const Rational& gamma, std::size_t candidates,
                        std::uint64_t seed, std::uint32_t mission_id, std::uint64_t step_cap) {
    std::vector<Mission> pool;
    for (std::size_t i = 0; i < std::max<std::size_t>(candidates, 1); ++i) {
        pool.push_back(simulate_mission(m, truth, gamma, sub_seed(seed, i), mission_id, step_cap));
    }
    return select_longest(pool);
}

const TransitionCounts& CountTable::action(StateId s, const std::string& a) const {
    static const TransitionCounts empty;
    auto it = per_action.find({s, a});
    return it == per_action.end() ? empty : it->second;
}

const TransitionCounts& CountTable::state(StateId s) const {
    static const TransitionCounts empty;
    auto it = pooled.find(s);
    return it == pooled.end() ? empty : it->second;
}

void CountTable::add(const TraceEvent& e) {
    per_action[{e.from, e.action}].add(e.to);
    pooled[e.from].add(e.to);
}

void check_chain(const std::vector<TraceEvent>& events) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& prev = events[i - 1];
        const auto& cur = events[i];
        if (cur.mission != prev.mission) continue;
        if (cur.from != prev.to) {
            throw ChainError("mission " + std::to_string(cur.mission) + " step " + std::to_string(cur.step) +
                             ": event does not start where the previous one ended");
        }
        if (cur.step != prev.step + 1) {
            throw ChainError("mission " + std::to_string(cur.mission) + ": step " + std::to_string(cur.step) +
                             " does not follow step " + std::to_string(prev.step));
        }
    }
}

CountTable count_transitions(const std::vector<Mission>& missions) {
    CountTable t;
    for (const auto& mission : missions) {
        check_chain(mission.events);
        for (const auto& e : mission.events) t.add(e);
    }
    return t;
}

Mission inject_mislabel(const Dtmc& m, const Mission& mission, const MislabelFault& fault, std::uint64_t seed) {
    StateId actual = m.state_id(fault.actual);
    StateId believed = m.state_id(fault.believed);
    const auto& acts = m.actions(believed);
    if (acts.empty()) throw ValidationError("believed state '" + fault.believed + "' has no policy");

    auto hit = std::find_if(mission.events.begin(), mission.events.end(),
                            [&](const TraceEvent& e) { return e.to == actual && e.step >= fault.onset_step; });
    if (hit == mission.events.end()) return mission;

    Mission out;
    out.id = mission.id;
    out.gamma = mission.gamma;
    out.events.assign(mission.events.begin(), hit + 1);
    out.events.back().to = believed;
    std::mt19937_64 rng(seed);
    std::vector<double> weights;
    for (const auto& a : acts) weights.push_back(to_double(a.weight));
    std::uint64_t step = out.events.back().step;
    for (std::uint64_t k = 0; k < fault.duration; ++k) {
        std::size_t a = sample_index(weights, uniform01(rng), [](double w) { return w; });
        out.events.push_back({mission.id, ++step, believed, acts[a].action, believed});
    }
    out.terminal = believed;
    out.truncated = true;
    return out;
}

}  // namespace pmca
