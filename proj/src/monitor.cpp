#include "pmca/monitor.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>

#include "pmca/error.hpp"

namespace pmca {

std::string to_string(Direction d) { return d == Direction::AtLeast ? "at_least" : "at_most"; }

Direction parse_direction(std::string_view text) {
    if (text == "at_least") return Direction::AtLeast;
    if (text == "at_most") return Direction::AtMost;
    throw ParseError("unknown threshold direction '" + std::string(text) + "'");
}

std::string to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Satisfied:
            return "satisfied";
        case VerdictStatus::Violated:
            return "violated";
        case VerdictStatus::Indeterminate:
            return "indeterminate";
        case VerdictStatus::Reported:
            return "reported";
    }
    return "reported";
}

std::string to_string(ActionHint h) {
    switch (h) {
        case ActionHint::Continue:
            return "continue";
        case ActionHint::Abort:
            return "abort";
        case ActionHint::Restart:
            return "restart";
    }
    return "continue";
}

std::string to_string(ConflictClass c) {
    switch (c) {
        case ConflictClass::None:
            return "none";
        case ConflictClass::KnownUnknown:
            return "known-unknown";
        case ConflictClass::UnknownUnknown:
            return "unknown-unknown";
    }
    return "none";
}

const ClosedForm& ClosedFormCache::at(const std::string& query_id, StateId state) const {
    auto it = forms.find(query_id);
    if (it == forms.end() || state.index >= it->second.size()) {
        throw ValidationError("cache has no closed form for query '" + query_id + "' from state index " +
                              std::to_string(state.index));
    }
    return it->second[state.index];
}

ClosedFormCache build_cache(const Dtmc& m, const std::vector<QuerySpec>& queries, std::string model_hash) {
    ClosedFormCache cache;
    cache.model_hash = std::move(model_hash);
    cache.analyzed_box = m.parameters();
    for (const auto& spec : queries) {
        if (spec.query.form == QueryForm::BoundedUntil) {
            throw ValidationError("query '" + spec.query.id + "': bounded until is numeric only and cannot be cached");
        }
        std::vector<ClosedForm>& per_state = cache.forms[spec.query.id];
        for (std::uint32_t s = 0; s < m.size(); ++s) {
            ReachQuery q = spec.query;
            q.initial = StateId{s};
            per_state.push_back(analyze_monotonicity(closed_form(m, q), cache.analyzed_box));
        }
    }
    return cache;
}

namespace {

bool catastrophic_edge(const Dtmc& m, const ParameterSite& site) {
    const LayerTag& tag = m.state(site.destination).tag;
    return tag.layer == Layer::Failure && tag.catastrophic;
}

EstimatorKind kind_of(const PriorSpec& p) {
    if (std::holds_alternative<PointPrior>(p)) return EstimatorKind::Point;
    if (std::holds_alternative<ImprecisePrior>(p)) return EstimatorKind::Interval;
    return EstimatorKind::Cbi;
}

}  // namespace

void check_priors(const Dtmc& m, const PriorTable& priors) {
    auto sites = m.parameter_sites();
    for (const auto& [name, _] : m.parameters()) {
        if (!priors.count(name)) throw ValidationError("parameter '" + name + "' has no prior");
        if (!sites.count(name)) {
            throw ValidationError("parameter '" + name + "' is not a bare per-action probability and cannot be learned");
        }
    }
    for (const auto& [name, prior] : priors) {
        if (!m.parameters().count(name)) throw ValidationError("prior for undeclared parameter '" + name + "'");
        bool catastrophic = catastrophic_edge(m, sites.at(name).front());
        for (const auto& site : sites.at(name)) {
            if (catastrophic_edge(m, site) != catastrophic) {
                throw ValidationError("parameter '" + name + "' mixes catastrophic and non-catastrophic edges");
            }
        }
        bool cbi = std::holds_alternative<CbiPriorSpec>(prior);
        if (catastrophic && !cbi) {
            throw ValidationError("parameter '" + name + "' leads into a catastrophic failure state and needs a cbi prior");
        }
        if (!catastrophic && cbi) {
            throw ValidationError("parameter '" + name + "' has a cbi prior but does not lead into a catastrophic failure");
        }
        if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) check_prior(*ip);
        if (const auto* pp = std::get_if<PointPrior>(&prior)) {
            if (sgn(pp->pseudo_count) <= 0 || sgn(pp->expectation) < 0 || pp->expectation > 1) {
                throw ValidationError("point prior for '" + name + "' needs pseudo > 0 and expectation in [0, 1]");
            }
        }
        if (const auto* cp = std::get_if<CbiPriorSpec>(&prior)) {
            if (sgn(cp->prior.theta) <= 0 || cp->prior.theta >= 1) {
                throw ValidationError("cbi prior for '" + name + "' needs theta in (0, 1)");
            }
        }
    }
}

std::pair<std::uint64_t, std::uint64_t> parameter_counts(const std::vector<ParameterSite>& sites,
                                                         const CountTable& counts) {
    std::uint64_t n = 0;
    std::uint64_t k = 0;
    std::set<std::pair<StateId, std::string>> rows;
    for (const auto& site : sites) {
        const TransitionCounts& c = counts.action(site.state, site.action);
        if (rows.insert({site.state, site.action}).second) n += c.total;
        k += c.count(site.destination);
    }
    return {n, k};
}

std::pair<std::uint64_t, std::uint64_t> parameter_counts(const Dtmc& m, const ParamName& name, const CountTable& counts) {
    auto sites = m.parameter_sites();
    auto it = sites.find(name);
    if (it == sites.end()) throw ValidationError("parameter '" + name + "' has no transition site");
    return parameter_counts(it->second, counts);
}

ParamEstimate estimate_parameter(const ParamName& name, const std::vector<ParameterSite>& sites, const PriorSpec& prior,
                                 const CountTable& counts, CbiBoxMode mode) {
    auto [n, k] = parameter_counts(sites, counts);
    ParamEstimate e;
    e.kind = kind_of(prior);
    e.sample_size = n;
    e.hits = k;
    if (const auto* pp = std::get_if<PointPrior>(&prior)) {
        e.bounds = Interval::point(point_estimate(pp->pseudo_count, pp->expectation, n, k));
    } else if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
        PosteriorInterval r = imprecise_update(*ip, n, k);
        e.bounds = {r.lower, r.upper};
        e.conflict = r.conflict;
    } else {
        const auto& cp = std::get<CbiPriorSpec>(prior);
        if (k > 0) {
            throw CbiRegimeViolated("CBI regime violated: " + std::to_string(k) + " transition(s) along catastrophic edge '" +
                                    name + "' observed; the model must be revised");
        }
        Rational b = round_up(cbi_bound(cp.prior, cp.previous_count + n));
        e.sample_size = cp.previous_count + n;
        e.bounds = mode == CbiBoxMode::Range ? Interval{0, b} : Interval::point(b);
    }
    return e;
}

ParamEstimate estimate_parameter(const Dtmc& m, const ParamName& name, const PriorSpec& prior, const CountTable& counts,
                                 CbiBoxMode mode) {
    auto sites = m.parameter_sites();
    auto it = sites.find(name);
    if (it == sites.end()) throw ValidationError("parameter '" + name + "' has no transition site");
    return estimate_parameter(name, it->second, prior, counts, mode);
}

PremissionReport premission_verify(const Dtmc& m, const PriorTable& priors, const CountTable& previous,
                                   const std::vector<QuerySpec>& queries, const ClosedFormCache& cache,
                                   CbiBoxMode mode) {
    check_priors(m, priors);
    PremissionReport r;
    for (const auto& [name, prior] : priors) {
        ParamEstimate e = estimate_parameter(m, name, prior, previous, mode);
        r.box.emplace(name, e.bounds);
        r.estimates.emplace(name, std::move(e));
    }
    for (const auto& q : queries) {
        r.bounds.emplace(q.query.id, bound_evaluate(cache.at(q.query.id, q.query.initial), r.box, cache.analyzed_box));
    }
    return r;
}

PriorTable runtime_priors(const Dtmc& m, const PriorTable& priors, const CountTable& previous) {
    PriorTable out;
    for (const auto& [name, prior] : priors) {
        auto [n, k] = parameter_counts(m, name, previous);
        if (const auto* pp = std::get_if<PointPrior>(&prior)) {
            out.emplace(name, PointPrior{pp->pseudo_count + Rational(static_cast<unsigned long>(n)),
                                         point_estimate(pp->pseudo_count, pp->expectation, n, k)});
        } else if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
            PosteriorInterval r = imprecise_update(*ip, n, k);
            out.emplace(name, ImprecisePrior{ip->pseudo_count, {r.lower, r.upper}});
        } else {
            CbiPriorSpec cp = std::get<CbiPriorSpec>(prior);
            if (k > 0) throw CbiRegimeViolated("CBI regime violated in previous data for '" + name + "'");
            cp.previous_count += n;
            out.emplace(name, cp);
        }
    }
    return out;
}

Verdict make_verdict(const Dtmc& m, const QuerySpec& q, std::uint64_t step, const BoundResult& bounds) {
    Verdict v;
    v.step = step;
    v.query = q.runtime_id.empty() ? q.query.id : q.runtime_id;
    v.bounds = bounds.bounds;
    v.conservative = bounds.conservative;
    if (!q.threshold) return v;
    const Rational& t = q.threshold->value;
    bool at_least = q.threshold->direction == Direction::AtLeast;
    bool satisfied = at_least ? bounds.bounds.lo >= t : bounds.bounds.hi <= t;
    bool violated = at_least ? bounds.bounds.hi < t : bounds.bounds.lo > t;
    v.status = satisfied ? VerdictStatus::Satisfied : violated ? VerdictStatus::Violated : VerdictStatus::Indeterminate;
    if (v.status == VerdictStatus::Violated) {
        auto targets = m.states_with_label(q.query.target_label);
        bool catastrophic = !targets.empty() && std::all_of(targets.begin(), targets.end(), [&](StateId s) {
            return m.state(s).tag.layer == Layer::Failure && m.state(s).tag.catastrophic;
        });
        v.hint = catastrophic ? ActionHint::Abort : ActionHint::Restart;
    }
    return v;
}

bool conflict_significant(std::uint64_t n, std::uint64_t k, const Interval& expectation, double alpha) {
    if (n == 0) return false;
    Rational freq(static_cast<unsigned long>(k), static_cast<unsigned long>(n));
    freq.canonicalize();
    bool below = freq < expectation.lo;
    bool above = freq > expectation.hi;
    if (!below && !above) return false;
    if (alpha >= 1) return true;
    double nn = static_cast<double>(n);
    if (below) {
        boost::math::binomial_distribution<double> d(nn, to_double(expectation.lo));
        return boost::math::cdf(d, static_cast<double>(k)) < alpha;
    }
    boost::math::binomial_distribution<double> d(nn, to_double(expectation.hi));
    return boost::math::cdf(boost::math::complement(d, static_cast<double>(k) - 1)) < alpha;
}

ConflictTracker::ConflictTracker(std::map<StateId, std::vector<ParamName>> groups, MonitorConfig config)
    : groups_(std::move(groups)), config_(config) {
    for (const auto& [_, names] : groups_) {
        for (const auto& n : names) tracks_[n];
    }
}

void ConflictTracker::update(const ParamName& name, bool raw, bool significant, const Rational& width) {
    Track& t = tracks_[name];
    t.raw = raw;
    t.significant = significant;
    t.streak = significant ? t.streak + 1 : 0;
    t.widths.push_back(to_double(width));
    while (t.widths.size() > std::max<std::size_t>(config_.window, 2)) t.widths.pop_front();
}

ConflictReport ConflictTracker::classify(std::uint64_t step) const {
    ConflictReport r;
    r.step = step;
    std::set<ParamName> persistent;
    for (const auto& [name, t] : tracks_) {
        r.raw[name] = t.raw;
        r.significant[name] = t.significant;
        r.streak[name] = t.streak;
        double slope = 0;
        std::size_t n = t.widths.size();
        if (n >= 2) {
            double mx = (static_cast<double>(n) - 1) / 2;
            double my = 0;
            for (double w : t.widths) my += w;
            my /= static_cast<double>(n);
            double num = 0;
            double den = 0;
            for (std::size_t i = 0; i < n; ++i) {
                num += (static_cast<double>(i) - mx) * (t.widths[i] - my);
                den += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
            }
            slope = num / den;
        }
        r.width_slope[name] = slope;
        if (t.streak >= config_.window) persistent.insert(name);
    }
    std::set<ParamName> uu;
    for (const auto& [_, names] : groups_) {
        if (names.size() < 2) continue;
        std::size_t hits = static_cast<std::size_t>(
            std::count_if(names.begin(), names.end(), [&](const ParamName& n) { return persistent.count(n) > 0; }));
        std::size_t need = config_.quorum == 0 ? names.size() : std::max<std::size_t>(config_.quorum, 2);
        if (hits >= need) {
            for (const auto& n : names) {
                if (persistent.count(n)) uu.insert(n);
            }
        }
    }
    r.unknown_unknowns.assign(uu.begin(), uu.end());
    for (const auto& n : persistent) {
        if (!uu.count(n)) r.known_unknowns.push_back(n);
    }
    if (!r.unknown_unknowns.empty()) {
        r.classification = ConflictClass::UnknownUnknown;
    } else if (!r.known_unknowns.empty()) {
        r.classification = ConflictClass::KnownUnknown;
    }
    return r;
}

Monitor::Monitor(Dtmc model, PriorTable priors, std::vector<QuerySpec> queries, ClosedFormCache cache,
                 MonitorConfig config)
    : model_(std::move(model)),
      priors_(std::move(priors)),
      queries_(std::move(queries)),
      cache_(std::move(cache)),
      config_(config),
      current_(model_.initial()) {
    check_priors(model_, priors_);
    for (const auto& q : queries_) {
        auto it = cache_.forms.find(q.query.id);
        if (it == cache_.forms.end() || it->second.size() != model_.size()) {
            throw ValidationError("cache does not cover query '" + q.query.id + "' for every state");
        }
    }
    sites_ = model_.parameter_sites();
    std::map<StateId, std::vector<ParamName>> groups;
    for (const auto& [name, sites] : sites_) {
        bool interval = std::holds_alternative<ImprecisePrior>(priors_.at(name));
        std::set<StateId> states;
        for (const auto& site : sites) {
            auto& row = row_parameters_[{model_.state(site.state).name, site.action}];
            if (std::find(row.begin(), row.end(), name) == row.end()) row.push_back(name);
            states.insert(site.state);
        }
        if (interval) {
            for (StateId s : states) groups[s].push_back(name);
        }
    }
    tracker_ = ConflictTracker(std::move(groups), config_);
    for (const auto& [name, prior] : priors_) {
        estimates_.emplace(name, estimate_parameter(name, sites_.at(name), prior, counts_, config_.cbi_box));
    }
    last_conflict_ = tracker_.classify(0);
}

BoundResult Monitor::bound(const std::string& query_id, StateId state, const ParamBox& box) {
    const ClosedForm& cf = cache_.at(query_id, state);
    ParamBox local;
    for (const auto& name : cf.function.parameters()) local.emplace(name, box.at(name));
    if (box_contains(cache_.analyzed_box, local)) return bound_evaluate(cf, local, cache_.analyzed_box);

    auto key = std::make_pair(query_id, state.index);
    auto it = reanalysed_.find(key);
    if (it == reanalysed_.end() || !box_contains(it->second.first, local)) {
        // Widen past the escaping estimate, halfway toward 0 or 1, so a drifting estimate
        // triggers a logarithmic number of re-analyses rather than one per step.
        ParamBox tight = local;
        ParamBox wide = local;
        const ParamBox* previous = it == reanalysed_.end() ? nullptr : &it->second.first;
        for (auto& [name, iv] : tight) {
            Interval c = cache_.analyzed_box.at(name);
            if (previous) c = {std::min(c.lo, previous->at(name).lo), std::max(c.hi, previous->at(name).hi)};
            Interval& w = wide.at(name);
            w = {iv.lo < c.lo ? Rational(iv.lo / 2) : c.lo, iv.hi > c.hi ? Rational((iv.hi + 1) / 2) : c.hi};
            iv = {std::min(iv.lo, c.lo), std::max(iv.hi, c.hi)};
        }
        ParamBox hull = wide;
        ClosedForm analysed;
        try {
            analysed = analyze_monotonicity(cf, hull);
        } catch (const SingularAtBoundary&) {
            hull = tight;
            analysed = analyze_monotonicity(cf, hull);
        }
        it = reanalysed_.insert_or_assign(key, std::make_pair(std::move(hull), std::move(analysed))).first;
    }
    return bound_evaluate(it->second.second, local, it->second.first);
}

StepRecord Monitor::record(std::uint64_t step) {
    StepRecord r;
    r.step = step;
    r.state = current_;
    r.estimates = estimates_;
    ParamBox box;
    for (const auto& [name, e] : estimates_) box.emplace(name, e.bounds);
    for (const auto& q : queries_) {
        BoundResult b = bound(q.query.id, current_, box);
        std::string id = q.runtime_id.empty() ? q.query.id : q.runtime_id;
        r.verdicts.push_back(make_verdict(model_, q, step, b));
        r.bounds.emplace(id, b);
    }
    r.regime_violations.assign(regime_violations_.begin(), regime_violations_.end());
    r.conflict = last_conflict_;
    r.conflict.step = step;
    return r;
}

StepRecord Monitor::initial_record() { return record(0); }

StepRecord Monitor::ingest(const TraceEvent& event) {
    if (event.from != current_) {
        throw ChainError("step " + std::to_string(event.step) + ": event starts in '" +
                         (event.from.index < model_.size() ? model_.state(event.from).name : std::string("?")) +
                         "' but the monitor is in '" + model_.state(current_).name + "'");
    }
    if (event.to.index >= model_.size()) throw ChainError("step " + std::to_string(event.step) + ": unknown destination");
    if (event.step != step_ + 1) {
        throw ChainError("step " + std::to_string(event.step) + " does not follow step " + std::to_string(step_));
    }
    const auto& acts = model_.actions(event.from);
    const Row* row = &model_.row(event.from);
    if (!acts.empty()) {
        auto it = std::find_if(acts.begin(), acts.end(), [&](const ActionRow& a) { return a.action == event.action; });
        if (it == acts.end()) {
            throw ChainError("step " + std::to_string(event.step) + ": state '" + model_.state(event.from).name +
                             "' has no action '" + event.action + "'");
        }
        row = &it->row;
    }
    if (!row->count(event.to)) {
        throw ChainError("step " + std::to_string(event.step) + ": no transition " + model_.state(event.from).name +
                         " -> " + model_.state(event.to).name);
    }

    counts_.add(event);
    step_ = event.step;
    auto touched = row_parameters_.find({model_.state(event.from).name, event.action});
    if (touched != row_parameters_.end()) {
        for (const auto& name : touched->second) {
            const PriorSpec& prior = priors_.at(name);
            ParamEstimate e;
            try {
                e = estimate_parameter(name, sites_.at(name), prior, counts_, config_.cbi_box);
            } catch (const CbiRegimeViolated&) {
                // The failure-free premise no longer holds; the last bound is kept and the
                // breach is reported with every later record.
                regime_violations_.insert(name);
                continue;
            }
            if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
                bool significant = e.conflict && conflict_significant(e.sample_size, e.hits, ip->expectation, config_.alpha);
                tracker_.update(name, e.conflict, significant, e.bounds.width());
            }
            estimates_[name] = std::move(e);
        }
        last_conflict_ = tracker_.classify(step_);
    }
    current_ = event.to;
    return record(step_);
}

std::vector<StepRecord> replay(Monitor& monitor, const Mission& mission) {
    std::vector<StepRecord> out;
    out.reserve(mission.events.size() + 1);
    out.push_back(monitor.initial_record());
    for (const auto& e : mission.events) out.push_back(monitor.ingest(e));
    return out;
}

}  // namespace pmca
