#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "pmca/error.hpp"
#include "pmca/shell.hpp"

namespace pmca {

using Json = nlohmann::ordered_json;

namespace {

std::string fraction(const Rational& v) { return to_fraction_string(v); }

Rational fraction_from(const Json& j, const std::string& what, std::size_t line = 0) {
    if (!j.is_string()) throw ParseError(what + " must be a fraction string", line);
    try {
        return parse_rational(j.get<std::string>());
    } catch (const std::invalid_argument&) {
        throw ParseError(what + ": '" + j.get<std::string>() + "' is not a number", line);
    }
}

Json interval_json(const Interval& iv) { return Json::array({fraction(iv.lo), fraction(iv.hi)}); }

Interval interval_from(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) throw ParseError(what + " must be [lo, hi]");
    return {fraction_from(j[0], what), fraction_from(j[1], what)};
}

Json number_json(const Rational& v, bool exact) {
    if (exact) return fraction(v);
    return std::stod(to_decimal_string(v, 6));
}

Json parse_json(std::string_view text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

template <typename T>
T field(const Json& j, const char* key, const std::string& where, std::size_t line = 0) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + " lacks '" + key + "'", line);
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        throw ParseError(where + ": field '" + std::string(key) + "' has the wrong type", line);
    }
}

StateId state_named(const Dtmc& m, const std::string& name, std::size_t line) {
    if (auto id = m.find_state(name)) return *id;
    throw ChainError("line " + std::to_string(line) + ": unknown state '" + name + "'");
}

void check_action(const Dtmc& m, const TraceEvent& e, std::size_t line) {
    const auto& acts = m.actions(e.from);
    if (acts.empty()) return;
    bool known = std::any_of(acts.begin(), acts.end(), [&](const ActionRow& a) { return a.action == e.action; });
    if (!known) {
        throw ChainError("line " + std::to_string(line) + ": state '" + m.state(e.from).name + "' has no action '" +
                         e.action + "'");
    }
}

std::vector<const QuerySpec*> runtime_queries(const ModelFile& file) {
    std::vector<const QuerySpec*> out;
    for (const auto& q : file.queries) {
        if (q.query.form != QueryForm::BoundedUntil) out.push_back(&q);
    }
    return out;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string interval_text(const Interval& iv, bool exact) {
    return "[" + format_number(iv.lo, exact) + ", " + format_number(iv.hi, exact) + "]";
}

}  // namespace

std::vector<QuerySpec> cacheable_queries(const ModelFile& file) {
    std::vector<QuerySpec> out;
    for (const QuerySpec* q : runtime_queries(file)) out.push_back(*q);
    return out;
}

std::string write_trace(const Dtmc& m, const Campaign& campaign, const TraceNotes& notes) {
    Json header;
    header["type"] = "campaign";
    header["seed"] = campaign.seed;
    header["generator"] = campaign.generator;
    header["gamma_distribution"] = "uniform";
    Json truth = Json::object();
    for (const auto& [name, v] : campaign.truth) truth[name] = fraction(v);
    header["truth"] = truth;
    Json missions = Json::array();
    for (const auto& mission : campaign.missions) {
        Json mj;
        mj["id"] = mission.id;
        mj["gamma"] = mission.gamma ? Json(fraction(*mission.gamma)) : Json(nullptr);
        mj["events"] = mission.events.size();
        mj["terminal"] = m.state(mission.terminal).name;
        mj["truncated"] = mission.truncated;
        missions.push_back(mj);
    }
    header["missions"] = missions;
    for (const auto& [key, value] : notes) header[key] = value;

    std::string out = header.dump() + "\n";
    for (const auto& mission : campaign.missions) {
        for (const auto& e : mission.events) {
            Json ej;
            ej["mission"] = e.mission;
            ej["step"] = e.step;
            ej["from"] = m.state(e.from).name;
            ej["action"] = e.action;
            ej["to"] = m.state(e.to).name;
            out += ej.dump() + "\n";
        }
    }
    return out;
}

Campaign read_trace(const Dtmc& m, std::string_view text) {
    Campaign campaign;
    campaign.generator.clear();
    std::map<std::uint32_t, std::size_t> index;  // mission id -> position
    std::map<std::uint32_t, std::uint64_t> declared_events;
    auto mission_for = [&](std::uint32_t id) -> Mission& {
        auto it = index.find(id);
        if (it == index.end()) {
            it = index.emplace(id, campaign.missions.size()).first;
            Mission mission;
            mission.id = id;
            mission.terminal = m.initial();
            campaign.missions.push_back(std::move(mission));
        }
        return campaign.missions[it->second];
    };

    std::size_t line_no = 0;
    bool seen_content = false;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        if (!j.is_object()) throw ParseError("each line must be a JSON object", line_no);
        if (j.contains("type")) {
            if (j["type"] != "campaign") throw ParseError("unknown record type", line_no);
            if (seen_content) throw ParseError("the campaign header must be the first line", line_no);
            seen_content = true;
            campaign.seed = field<std::uint64_t>(j, "seed", "header", line_no);
            campaign.generator = field<std::string>(j, "generator", "header", line_no);
            if (j.contains("truth")) {
                for (const auto& [name, v] : j["truth"].items()) {
                    campaign.truth.emplace(name, fraction_from(v, "truth of " + name, line_no));
                }
            }
            if (j.contains("missions")) {
                for (const auto& mj : j["missions"]) {
                    auto id = field<std::uint32_t>(mj, "id", "header mission", line_no);
                    if (index.count(id)) throw ParseError("mission " + std::to_string(id) + " listed twice", line_no);
                    Mission& mission = mission_for(id);
                    if (mj.contains("gamma") && !mj["gamma"].is_null()) {
                        mission.gamma = fraction_from(mj["gamma"], "gamma", line_no);
                    }
                    mission.truncated = mj.value("truncated", false);
                    if (mj.contains("terminal")) {
                        mission.terminal = state_named(m, field<std::string>(mj, "terminal", "header mission", line_no), line_no);
                    }
                    declared_events[id] = mj.value("events", std::uint64_t{0});
                }
            }
            continue;
        }
        seen_content = true;
        TraceEvent e;
        e.mission = field<std::uint32_t>(j, "mission", "event", line_no);
        e.step = field<std::uint64_t>(j, "step", "event", line_no);
        e.from = state_named(m, field<std::string>(j, "from", "event", line_no), line_no);
        e.action = field<std::string>(j, "action", "event", line_no);
        e.to = state_named(m, field<std::string>(j, "to", "event", line_no), line_no);
        check_action(m, e, line_no);
        Mission& mission = mission_for(e.mission);
        if (mission.events.empty()) {
            if (e.step != 1) throw ChainError("line " + std::to_string(line_no) + ": mission starts at step " + std::to_string(e.step));
        } else {
            const TraceEvent& prev = mission.events.back();
            if (e.step != prev.step + 1 || e.from != prev.to) {
                throw ChainError("line " + std::to_string(line_no) + ": mission " + std::to_string(e.mission) + " step " +
                                 std::to_string(e.step) + " does not chain onto the previous event");
            }
        }
        mission.events.push_back(std::move(e));
    }
    for (auto& mission : campaign.missions) {
        if (!mission.events.empty()) mission.terminal = mission.events.back().to;
        auto it = declared_events.find(mission.id);
        if (it != declared_events.end() && it->second != mission.events.size()) {
            throw ChainError("mission " + std::to_string(mission.id) + ": header declares " + std::to_string(it->second) +
                             " events but the log holds " + std::to_string(mission.events.size()));
        }
    }
    return campaign;
}

std::string write_cache(const ModelFile& file, const ClosedFormCache& cache) {
    Json j;
    j["type"] = "closed-form-cache";
    j["model_hash"] = cache.model_hash;
    Json box = Json::object();
    for (const auto& [name, iv] : cache.analyzed_box) box[name] = interval_json(iv);
    j["analyzed_box"] = box;
    Json forms = Json::object();
    for (const auto& [id, per_state] : cache.forms) {
        Json list = Json::array();
        for (std::size_t s = 0; s < per_state.size(); ++s) {
            const ClosedForm& cf = per_state[s];
            Json f;
            f["state"] = file.model.states().at(s).name;
            f["function"] = cf.function.to_string();
            Json mono = Json::object();
            for (const auto& [p, mn] : cf.monotonicity) mono[p] = to_string(mn);
            f["monotonicity"] = mono;
            f["warnings"] = cf.warnings;
            list.push_back(f);
        }
        forms[id] = list;
    }
    j["forms"] = forms;
    return j.dump(1) + "\n";
}

ClosedFormCache read_cache(const ModelFile& file, std::string_view text) {
    Json j = parse_json(text, "cache");
    if (j.value("type", "") != "closed-form-cache") throw ParseError("not a closed-form cache file");
    ClosedFormCache cache;
    cache.model_hash = field<std::string>(j, "model_hash", "cache");
    if (cache.model_hash != model_hash(file)) {
        throw ValidationError("cache was built for a different model (hash " + cache.model_hash + ")");
    }
    Json box = field<Json>(j, "analyzed_box", "cache");
    for (const auto& [name, iv] : box.items()) {
        cache.analyzed_box.emplace(name, interval_from(iv, "analyzed box of " + name));
    }
    Json forms = field<Json>(j, "forms", "cache");
    for (const QuerySpec* q : runtime_queries(file)) {
        auto it = forms.find(q->query.id);
        if (it == forms.end() || it->size() != file.model.size()) {
            throw ValidationError("cache lacks closed forms for query '" + q->query.id + "'");
        }
        std::vector<ClosedForm>& per_state = cache.forms[q->query.id];
        for (std::uint32_t s = 0; s < file.model.size(); ++s) {
            const Json& f = (*it)[s];
            if (field<std::string>(f, "state", "cache entry") != file.model.states()[s].name) {
                throw ValidationError("cache entries for '" + q->query.id + "' are not in state order");
            }
            ClosedForm cf;
            cf.query = q->query;
            cf.query.initial = StateId{s};
            try {
                cf.function = parse_rational_function(field<std::string>(f, "function", "cache entry"));
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw ParseError(std::string("cache function: ") + e.what());
            }
            Json mono = field<Json>(f, "monotonicity", "cache entry");
            for (const auto& [p, mn] : mono.items()) {
                cf.monotonicity.emplace(p, parse_monotonicity(mn.get<std::string>()));
            }
            cf.warnings = f.value("warnings", std::vector<std::string>{});
            per_state.push_back(std::move(cf));
        }
    }
    return cache;
}

std::string write_priors(const ModelFile& file, const PriorTable& priors) {
    Json j;
    j["type"] = "runtime-priors";
    j["model_hash"] = model_hash(file);
    Json table = Json::object();
    for (const auto& name : file.parameter_order) {
        auto it = priors.find(name);
        if (it == priors.end()) continue;
        Json p;
        if (const auto* ip = std::get_if<ImprecisePrior>(&it->second)) {
            p["kind"] = "interval";
            p["pseudo_count"] = interval_json(ip->pseudo_count);
            p["expectation"] = interval_json(ip->expectation);
        } else if (const auto* pp = std::get_if<PointPrior>(&it->second)) {
            p["kind"] = "point";
            p["pseudo_count"] = fraction(pp->pseudo_count);
            p["expectation"] = fraction(pp->expectation);
        } else {
            const auto& cp = std::get<CbiPriorSpec>(it->second);
            p["kind"] = "cbi";
            p["theta"] = fraction(cp.prior.theta);
            p["previous_count"] = cp.previous_count;
        }
        table[name] = p;
    }
    j["priors"] = table;
    return j.dump(1) + "\n";
}

PriorTable read_priors(const ModelFile& file, std::string_view text) {
    Json j = parse_json(text, "runtime priors");
    if (j.value("type", "") != "runtime-priors") throw ParseError("not a runtime-priors file");
    if (field<std::string>(j, "model_hash", "runtime priors") != model_hash(file)) {
        throw ValidationError("runtime priors were derived for a different model");
    }
    PriorTable out;
    Json table = field<Json>(j, "priors", "runtime priors");
    for (const auto& [name, p] : table.items()) {
        std::string kind = field<std::string>(p, "kind", "prior of " + name);
        if (kind == "interval") {
            out.emplace(name, ImprecisePrior{interval_from(p["pseudo_count"], "pseudo_count"),
                                             interval_from(p["expectation"], "expectation")});
        } else if (kind == "point") {
            out.emplace(name, PointPrior{fraction_from(p["pseudo_count"], "pseudo_count"),
                                         fraction_from(p["expectation"], "expectation")});
        } else if (kind == "cbi") {
            out.emplace(name, CbiPriorSpec{{fraction_from(p["theta"], "theta")},
                                           field<std::uint64_t>(p, "previous_count", "prior of " + name)});
        } else {
            throw ParseError("unknown prior kind '" + kind + "'");
        }
    }
    check_priors(file.model, out);
    return out;
}

std::string series_header(const ModelFile& file) {
    std::string out = "step,state";
    for (const auto& p : file.parameter_order) out += "," + p + "_lo," + p + "_hi";
    for (const QuerySpec* q : runtime_queries(file)) out += "," + q->runtime_id + "_lo," + q->runtime_id + "_hi";
    return out;
}

std::string series_row(const ModelFile& file, const StepRecord& record, bool exact) {
    std::string out = std::to_string(record.step) + "," + file.model.state(record.state).name;
    for (const auto& p : file.parameter_order) {
        const Interval& iv = record.estimates.at(p).bounds;
        out += "," + format_number(iv.lo, exact) + "," + format_number(iv.hi, exact);
    }
    for (const QuerySpec* q : runtime_queries(file)) {
        const Interval& iv = record.bounds.at(q->runtime_id).bounds;
        out += "," + format_number(iv.lo, exact) + "," + format_number(iv.hi, exact);
    }
    return out;
}

std::string verdict_line(const Verdict& v, bool exact) {
    Json j;
    j["step"] = v.step;
    j["query"] = v.query;
    j["lo"] = number_json(v.bounds.lo, exact);
    j["hi"] = number_json(v.bounds.hi, exact);
    j["status"] = to_string(v.status);
    j["hint"] = to_string(v.hint);
    j["conservative"] = v.conservative;
    return j.dump();
}

std::string conflict_line(const StepRecord& record) {
    const ConflictReport& c = record.conflict;
    Json j;
    j["step"] = record.step;
    j["classification"] = to_string(c.classification);
    j["known_unknowns"] = c.known_unknowns;
    j["unknown_unknowns"] = c.unknown_unknowns;
    std::vector<std::string> raw;
    std::vector<std::string> significant;
    for (const auto& [name, flag] : c.raw) {
        if (flag) raw.push_back(name);
    }
    for (const auto& [name, flag] : c.significant) {
        if (flag) significant.push_back(name);
    }
    j["raw"] = raw;
    j["significant"] = significant;
    j["regime_violations"] = record.regime_violations;
    return j.dump();
}

std::string premission_table(const ModelFile& file, const PremissionReport& report, bool exact) {
    std::vector<std::vector<std::string>> rows{{""}, {"pseudo-count"}, {"prior"}, {"posterior"}, {"sample size"}};
    for (const auto& name : file.parameter_order) {
        const PriorSpec& prior = file.priors.at(name);
        const ParamEstimate& e = report.estimates.at(name);
        rows[0].push_back(name);
        if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
            rows[1].push_back(interval_text(ip->pseudo_count, exact));
            rows[2].push_back(interval_text(ip->expectation, exact));
            rows[3].push_back(interval_text(e.bounds, exact));
        } else if (const auto* pp = std::get_if<PointPrior>(&prior)) {
            rows[1].push_back(format_number(pp->pseudo_count, exact));
            rows[2].push_back(format_number(pp->expectation, exact));
            rows[3].push_back(format_number(e.bounds.lo, exact));
        } else {
            rows[1].push_back("N/A");
            rows[2].push_back("theta=" + format_number(std::get<CbiPriorSpec>(prior).prior.theta, exact));
            rows[3].push_back(format_number(e.bounds.hi, exact));
        }
        rows[4].push_back(std::to_string(e.sample_size));
    }
    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
    }
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) line += (i ? " | " : "") + pad(r[i], widths[i]);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    out += "\n";
    for (const auto& q : file.queries) {
        auto it = report.bounds.find(q.query.id);
        if (it == report.bounds.end()) continue;
        out += q.query.id + " from " + file.model.state(q.query.initial).name + ": " + interval_text(it->second.bounds, exact);
        if (it->second.conservative) out += " (conservative enclosure)";
        if (q.threshold) {
            Verdict v = make_verdict(file.model, q, 0, it->second);
            out += "  " + to_string(v.status);
        }
        out += "\n";
    }
    return out;
}

}  // namespace pmca
