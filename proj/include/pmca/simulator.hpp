#pragma once

// Ground-truth trace generation: sampled missions on a concrete chain, multi-mission
// campaigns with a per-mission policy weight, transition tallies, and a state-mislabel
// fault injector used to exercise the conflict alarms.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pmca/dtmc.hpp"
#include "pmca/estimators.hpp"

namespace pmca {

inline constexpr const char* kGeneratorId = "mt19937_64+splitmix64";
inline constexpr std::uint64_t kDefaultStepCap = 10000;

/// Which policy weight the per-mission gamma replaces. The named action gets gamma; the other
/// actions of the state share 1 - gamma in proportion to their declared weights.
struct GammaSite {
    std::string state;
    std::string action;

    friend bool operator==(const GammaSite&, const GammaSite&) = default;
};

struct GroundTruth {
    Valuation values;
    std::optional<GammaSite> gamma_site;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct TraceEvent {
    std::uint32_t mission = 0;
    std::uint64_t step = 0;  // 1-based within the mission
    StateId from;
    std::string action;
    StateId to;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Mission {
    std::uint32_t id = 0;
    std::optional<Rational> gamma;
    std::vector<TraceEvent> events;
    StateId terminal;
    bool truncated = false;

    friend bool operator==(const Mission&, const Mission&) = default;
};

struct Campaign {
    std::uint64_t seed = 0;
    std::string generator = kGeneratorId;
    Valuation truth;
    std::vector<Mission> missions;

    friend bool operator==(const Campaign&, const Campaign&) = default;
};

/// Seed for a sub-stream; splitmix64 over (seed, stream).
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

/// Throws ValidationError if the truth leaves a parameter unbound or the substituted chain
/// is not stochastic; throws ValidationError for an unknown gamma site.
void check_truth(const Dtmc& m, const GroundTruth& truth, const std::optional<Rational>& gamma = std::nullopt);

/// One path from the model's initial state until an absorbing state or `step_cap` events.
/// Each step samples the action from the policy, then the destination from that action's row.
Mission simulate_mission(const Dtmc& m, const GroundTruth& truth, std::optional<Rational> gamma, std::uint64_t seed,
                         std::uint32_t mission_id = 1, std::uint64_t step_cap = kDefaultStepCap);

/// `n_missions` missions with ids 1..n, each with gamma drawn uniformly from `gamma_range`
/// (ignored when the truth has no gamma site).
Campaign generate_campaign(const Dtmc& m, const GroundTruth& truth, std::size_t n_missions, const Interval& gamma_range,
                           std::uint64_t seed, std::uint64_t step_cap = kDefaultStepCap);

/// Simulates `candidates` missions at a fixed gamma and returns the one with the most events
/// (first on ties), renumbered to `mission_id`.
Mission longest_mission(const Dtmc& m, const GroundTruth& truth, const Rational& gamma, std::size_t candidates,
                        std::uint64_t seed, std::uint32_t mission_id, std::uint64_t step_cap = kDefaultStepCap);

const Mission& select_longest(const std::vector<Mission>& missions);

struct CountTable {
    std::map<std::pair<StateId, std::string>, TransitionCounts> per_action;
    std::map<StateId, TransitionCounts> pooled;

    const TransitionCounts& action(StateId s, const std::string& a) const;
    const TransitionCounts& state(StateId s) const;
    void add(const TraceEvent& e);

    friend bool operator==(const CountTable&, const CountTable&) = default;
};

/// Throws ChainError if consecutive events of a mission do not chain or steps are not consecutive.
void check_chain(const std::vector<TraceEvent>& events);

CountTable count_transitions(const std::vector<Mission>& missions);

/// The robot is in `actual` but its sensors report `believed`.
struct MislabelFault {
    std::string actual;
    std::string believed;
    std::uint64_t onset_step = 1;  // first step at which entering `actual` triggers the fault
    std::uint64_t duration = 200;  // mislabelled events reported before the mission is cut off
};

/// Rewrites a mission as the robot would report it under the fault: the first entry into
/// `actual` at or after the onset is reported as `believed`, followed by `duration` events that
/// loop on `believed` under actions sampled from its policy; the mission is then truncated.
/// Returns the mission unchanged if `actual` is never entered.
Mission inject_mislabel(const Dtmc& m, const Mission& mission, const MislabelFault& fault, std::uint64_t seed);

}  // namespace pmca
