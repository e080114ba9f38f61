#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "pmca/error.hpp"
#include "pmca/shell.hpp"

namespace pmca {

namespace {

std::size_t line_of(const YAML::Node& node) {
    const YAML::Mark mark = node.Mark();
    return mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) { throw ParseError(what, line_of(node)); }

void allow_keys(const YAML::Node& map, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    for (const auto& kv : map) {
        auto key = kv.first.as<std::string>();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            fail(kv.first, "unknown key '" + key + "' in " + where);
        }
    }
}

std::string scalar(const YAML::Node& node, const std::string& what) {
    if (!node || !node.IsScalar()) fail(node, what + " must be a scalar");
    return node.Scalar();
}

const YAML::Node required(const YAML::Node& map, const char* key, const std::string& where) {
    YAML::Node n = map[key];
    if (!n) fail(map, where + " lacks '" + key + "'");
    return n;
}

Rational rational(const YAML::Node& node, const std::string& what) {
    std::string text = scalar(node, what);
    try {
        return parse_rational(text);
    } catch (const std::invalid_argument&) {
        fail(node, what + ": '" + text + "' is not a number");
    }
}

std::uint64_t count(const YAML::Node& node, const std::string& what) {
    Rational v = rational(node, what);
    if (sgn(v) < 0 || v.get_den() != 1 || !v.get_num().fits_ulong_p()) fail(node, what + " must be a non-negative integer");
    return v.get_num().get_ui();
}

Interval interval(const YAML::Node& node, const std::string& what) {
    if (!node.IsSequence() || node.size() != 2) fail(node, what + " must be a two-element list [lo, hi]");
    Interval iv{rational(node[0], what), rational(node[1], what)};
    if (iv.lo > iv.hi) fail(node, what + ": lower end exceeds upper end");
    return iv;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

Layer parse_layer(const YAML::Node& node) {
    std::string s = scalar(node, "layer");
    if (s == "normal") return Layer::Normal;
    if (s == "unsafe") return Layer::Unsafe;
    if (s == "failure") return Layer::Failure;
    fail(node, "unknown layer '" + s + "' (expected normal, unsafe or failure)");
}

std::string layer_name(Layer l) {
    switch (l) {
        case Layer::Normal:
            return "normal";
        case Layer::Unsafe:
            return "unsafe";
        case Layer::Failure:
            return "failure";
    }
    return "normal";
}

/// "rest", a number, a parameter name, or (mixed rows only) a linear combination of parameters.
TransitionExpr parse_entry(const YAML::Node& node, bool allow_mix) {
    std::string text = scalar(node, "transition entry");
    if (text == "rest") return Complement{};
    if (is_identifier(text)) return Param{text};
    RationalFunction f;
    try {
        f = parse_rational_function(text);
    } catch (const std::exception& e) {
        fail(node, "cannot parse transition entry '" + text + "': " + e.what());
    }
    if (!f.denominator().is_constant()) fail(node, "transition entry '" + text + "' is not linear in its parameters");
    Rational scale = f.denominator().terms().begin()->second;
    PolicyMix mix;
    for (const auto& [mono, coeff] : f.numerator().terms()) {
        if (mono.is_constant()) {
            mix.constant = coeff / scale;
        } else if (mono.degree() == 1) {
            mix.terms.emplace_back(coeff / scale, mono.factors().front().first);
        } else {
            fail(node, "transition entry '" + text + "' is not linear in its parameters");
        }
    }
    if (mix.terms.empty()) return Constant{mix.constant};
    if (!allow_mix) fail(node, "action rows take a number, a parameter name or 'rest', not '" + text + "'");
    return mix;
}

std::string entry_text(const TransitionExpr& e) {
    if (const auto* c = std::get_if<Constant>(&e)) return exact_text(c->value);
    if (const auto* p = std::get_if<Param>(&e)) return p->name;
    if (std::holds_alternative<Complement>(e)) return "rest";
    const auto& mix = std::get<PolicyMix>(e);
    std::string out;
    if (!is_zero(mix.constant)) out = exact_text(mix.constant);
    for (const auto& [w, name] : mix.terms) {
        if (!out.empty()) out += " + ";
        out += exact_text(w) + "*" + name;
    }
    return out;
}

PriorSpec parse_prior(const YAML::Node& node, const std::string& name) {
    std::string where = "prior of '" + name + "'";
    if (!node.IsMap()) fail(node, where + " must be a mapping");
    std::string kind = scalar(required(node, "kind", where), where + " kind");
    if (kind == "interval") {
        allow_keys(node, {"kind", "pseudo_count", "expectation"}, where);
        return ImprecisePrior{interval(required(node, "pseudo_count", where), where + " pseudo_count"),
                              interval(required(node, "expectation", where), where + " expectation")};
    }
    if (kind == "point") {
        allow_keys(node, {"kind", "pseudo_count", "expectation"}, where);
        return PointPrior{rational(required(node, "pseudo_count", where), where + " pseudo_count"),
                          rational(required(node, "expectation", where), where + " expectation")};
    }
    if (kind == "cbi") {
        allow_keys(node, {"kind", "theta", "previous_count"}, where);
        CbiPriorSpec spec{{rational(required(node, "theta", where), where + " theta")}, 0};
        if (node["previous_count"]) spec.previous_count = count(node["previous_count"], where + " previous_count");
        return spec;
    }
    fail(node["kind"], "unknown prior kind '" + kind + "' (expected interval, point or cbi)");
}

void emit_interval(YAML::Emitter& out, const Interval& iv) {
    out << YAML::Flow << YAML::BeginSeq << exact_text(iv.lo) << exact_text(iv.hi) << YAML::EndSeq;
}

void emit_prior(YAML::Emitter& out, const PriorSpec& prior) {
    out << YAML::Flow << YAML::BeginMap;
    if (const auto* ip = std::get_if<ImprecisePrior>(&prior)) {
        out << YAML::Key << "kind" << YAML::Value << "interval";
        out << YAML::Key << "pseudo_count" << YAML::Value;
        emit_interval(out, ip->pseudo_count);
        out << YAML::Key << "expectation" << YAML::Value;
        emit_interval(out, ip->expectation);
    } else if (const auto* pp = std::get_if<PointPrior>(&prior)) {
        out << YAML::Key << "kind" << YAML::Value << "point";
        out << YAML::Key << "pseudo_count" << YAML::Value << exact_text(pp->pseudo_count);
        out << YAML::Key << "expectation" << YAML::Value << exact_text(pp->expectation);
    } else {
        const auto& cp = std::get<CbiPriorSpec>(prior);
        out << YAML::Key << "kind" << YAML::Value << "cbi";
        out << YAML::Key << "theta" << YAML::Value << exact_text(cp.prior.theta);
        if (cp.previous_count > 0) out << YAML::Key << "previous_count" << YAML::Value << cp.previous_count;
    }
    out << YAML::EndMap;
}

void emit_row(YAML::Emitter& out, const Dtmc& m, const Row& row) {
    out << YAML::Flow << YAML::BeginMap;
    for (const auto& [dest, e] : row) out << YAML::Key << m.state(dest).name << YAML::Value << entry_text(e);
    out << YAML::EndMap;
}

struct StateLines {
    std::map<std::uint32_t, std::size_t> lines;
    std::string at(const std::optional<StateId>& s) const {
        if (!s) return "";
        auto it = lines.find(s->index);
        return it == lines.end() ? "" : "line " + std::to_string(it->second) + ": ";
    }
};

}  // namespace

std::string exact_text(const Rational& value) {
    mpz_class den = value.get_den();
    unsigned twos = 0;
    unsigned fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
        den /= 2;
        ++twos;
    }
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
        den /= 5;
        ++fives;
    }
    unsigned digits = std::max(twos, fives);
    if (den != 1 || digits > 30) return to_fraction_string(value);
    if (digits == 0) return value.get_num().get_str();
    mpz_class ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, digits);
    mpz_class scaled = value.get_num() * (ten_pow / value.get_den());
    bool negative = sgn(scaled) < 0;
    std::string s = mpz_class(abs(scaled)).get_str();
    if (s.size() <= digits) s.insert(0, digits - s.size() + 1, '0');
    s.insert(s.size() - digits, ".");
    return negative ? "-" + s : s;
}

std::string format_number(const Rational& value, bool exact) {
    return exact ? to_fraction_string(value) : to_decimal_string(value, 6);
}

ModelFile parse_model(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0);
    }
    if (!root.IsMap()) throw ParseError("model file must be a mapping", 1);
    allow_keys(root, {"name", "initial", "parameters", "states", "queries", "truth"}, "model");

    ModelFile file;
    file.name = root["name"] ? scalar(root["name"], "name") : "";

    ParamBox box;
    if (YAML::Node params = root["parameters"]) {
        if (!params.IsMap()) fail(params, "parameters must be a mapping of name to declaration");
        for (const auto& kv : params) {
            std::string name = kv.first.as<std::string>();
            if (!is_identifier(name)) fail(kv.first, "parameter name '" + name + "' is not an identifier");
            if (name == "rest") fail(kv.first, "'rest' is reserved");
            if (box.count(name)) fail(kv.first, "parameter '" + name + "' declared twice");
            const YAML::Node& decl = kv.second;
            allow_keys(decl, {"box", "prior"}, "parameter '" + name + "'");
            box.emplace(name, interval(required(decl, "box", "parameter '" + name + "'"), "box of '" + name + "'"));
            file.parameter_order.push_back(name);
            if (decl["prior"]) file.priors.emplace(name, parse_prior(decl["prior"], name));
        }
    }

    YAML::Node states_node = required(root, "states", "model");
    if (!states_node.IsSequence() || states_node.size() == 0) fail(states_node, "states must be a non-empty list");
    std::vector<State> states;
    StateLines lines;
    for (const auto& s : states_node) {
        allow_keys(s, {"name", "labels", "layer", "catastrophic", "action", "actions", "transitions"}, "state");
        State st;
        st.name = scalar(required(s, "name", "state"), "state name");
        for (const auto& other : states) {
            if (other.name == st.name) fail(s, "state '" + st.name + "' declared twice");
        }
        if (YAML::Node labels = s["labels"]) {
            if (!labels.IsSequence()) fail(labels, "labels must be a list");
            for (const auto& l : labels) st.labels.insert(scalar(l, "label"));
        }
        if (s["layer"]) st.tag.layer = parse_layer(s["layer"]);
        if (s["catastrophic"]) {
            st.tag.catastrophic = s["catastrophic"].as<bool>(false);
            if (st.tag.catastrophic && st.tag.layer != Layer::Failure) {
                fail(s["catastrophic"], "only failure states can be catastrophic");
            }
        }
        lines.lines[static_cast<std::uint32_t>(states.size())] = line_of(s);
        states.push_back(std::move(st));
    }
    auto state_index = [&](const YAML::Node& node) {
        std::string name = scalar(node, "state reference");
        for (std::uint32_t i = 0; i < states.size(); ++i) {
            if (states[i].name == name) return StateId{i};
        }
        fail(node, "unknown state '" + name + "'");
    };

    std::vector<std::vector<ActionRow>> actions(states.size());
    std::vector<Row> plain_rows(states.size());
    bool any_actions = false;
    bool any_mix = false;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const YAML::Node s = states_node[i];
        bool has_actions = static_cast<bool>(s["actions"]);
        bool has_transitions = static_cast<bool>(s["transitions"]);
        if (has_actions == has_transitions) fail(s, "state '" + states[i].name + "' needs exactly one of actions or transitions");
        if (has_actions) {
            if (s["action"]) fail(s["action"], "'action' names the single action of a transitions block");
            any_actions = true;
            const YAML::Node list = s["actions"];
            if (!list.IsSequence() || list.size() == 0) fail(list, "actions must be a non-empty list");
            for (const auto& a : list) {
                allow_keys(a, {"name", "weight", "to"}, "action");
                ActionRow ar;
                ar.action = scalar(required(a, "name", "action"), "action name");
                ar.weight = rational(required(a, "weight", "action"), "action weight");
                const YAML::Node to = required(a, "to", "action");
                if (!to.IsMap()) fail(to, "'to' must map destination states to probabilities");
                for (const auto& kv : to) {
                    StateId d = state_index(kv.first);
                    if (ar.row.count(d)) fail(kv.first, "destination listed twice");
                    ar.row.emplace(d, parse_entry(kv.second, false));
                }
                actions[i].push_back(std::move(ar));
            }
        } else {
            const YAML::Node to = s["transitions"];
            if (!to.IsMap()) fail(to, "transitions must map destination states to probabilities");
            for (const auto& kv : to) {
                StateId d = state_index(kv.first);
                if (plain_rows[i].count(d)) fail(kv.first, "destination listed twice");
                TransitionExpr e = parse_entry(kv.second, true);
                any_mix = any_mix || std::holds_alternative<PolicyMix>(e);
                plain_rows[i].emplace(d, std::move(e));
            }
            std::string name = s["action"] ? scalar(s["action"], "action name") : "-";
            actions[i].push_back(ActionRow{name, Rational(1), plain_rows[i]});
        }
    }
    if (any_mix && any_actions) {
        fail(root["states"], "linear transition expressions cannot be combined with per-action rows");
    }

    StateId initial{0};
    if (root["initial"]) initial = state_index(root["initial"]);
    for (const auto& [name, _] : file.priors) {
        if (!box.count(name)) throw ParseError("prior for undeclared parameter '" + name + "'");
    }

    try {
        file.model = any_mix ? Dtmc::from_rows(std::move(states), initial, std::move(plain_rows), std::move(box))
                             : Dtmc(std::move(states), initial, std::move(actions), std::move(box));
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()));
    }
    std::vector<Violation> violations = validate(file.model);
    if (!violations.empty()) {
        std::string msg;
        for (const auto& v : violations) {
            if (!msg.empty()) msg += "\n";
            msg += lines.at(v.state) + to_string(v.kind) + ": " + v.message;
        }
        throw ValidationError(msg);
    }
    if (!file.priors.empty()) check_priors(file.model, file.priors);

    auto model_state = [&](const YAML::Node& node) {
        std::string name = scalar(node, "state reference");
        if (auto id = file.model.find_state(name)) return *id;
        fail(node, "unknown state '" + name + "'");
    };
    if (YAML::Node queries = root["queries"]) {
        if (!queries.IsSequence()) fail(queries, "queries must be a list");
        std::set<std::string> ids;
        for (const auto& q : queries) {
            allow_keys(q, {"id", "initial", "target", "form", "constraint", "bound", "runtime", "threshold"}, "query");
            QuerySpec spec;
            spec.query.id = scalar(required(q, "id", "query"), "query id");
            spec.query.initial = q["initial"] ? model_state(q["initial"]) : initial;
            spec.query.target_label = scalar(required(q, "target", "query"), "query target");
            if (q["form"]) {
                try {
                    spec.query.form = parse_query_form(scalar(q["form"], "query form"));
                } catch (const ParseError& e) {
                    fail(q["form"], e.what());
                }
            }
            if (q["constraint"]) spec.query.constraint_label = scalar(q["constraint"], "query constraint");
            if (spec.query.form == QueryForm::BoundedUntil) {
                spec.query.bound = static_cast<unsigned>(count(required(q, "bound", "bounded query"), "query bound"));
            } else if (q["bound"]) {
                fail(q["bound"], "only bounded-until queries take a bound");
            }
            spec.runtime_id = q["runtime"] ? scalar(q["runtime"], "runtime id") : spec.query.id;
            if (YAML::Node t = q["threshold"]) {
                allow_keys(t, {"direction", "value"}, "threshold");
                Threshold th;
                try {
                    th.direction = parse_direction(scalar(required(t, "direction", "threshold"), "threshold direction"));
                } catch (const ParseError& e) {
                    fail(t["direction"], e.what());
                }
                th.value = rational(required(t, "value", "threshold"), "threshold value");
                spec.threshold = th;
            }
            if (!ids.insert(spec.query.id).second || (spec.runtime_id != spec.query.id && !ids.insert(spec.runtime_id).second)) {
                fail(q, "query id '" + spec.query.id + "' is not unique");
            }
            file.queries.push_back(std::move(spec));
        }
    }

    if (YAML::Node t = root["truth"]) {
        allow_keys(t, {"values", "gamma"}, "truth");
        GroundTruth truth;
        YAML::Node values = required(t, "values", "truth");
        if (!values.IsMap()) fail(values, "truth values must be a mapping");
        for (const auto& kv : values) {
            std::string name = kv.first.as<std::string>();
            if (!file.model.parameters().count(name)) fail(kv.first, "truth for undeclared parameter '" + name + "'");
            truth.values.emplace(name, rational(kv.second, "truth of '" + name + "'"));
        }
        if (YAML::Node g = t["gamma"]) {
            allow_keys(g, {"state", "action"}, "truth gamma");
            truth.gamma_site = GammaSite{scalar(required(g, "state", "gamma"), "gamma state"),
                                         scalar(required(g, "action", "gamma"), "gamma action")};
        }
        check_truth(file.model, truth);
        file.truth = std::move(truth);
    }
    return file;
}

ModelFile load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

std::string serialize_model(const ModelFile& file) {
    const Dtmc& m = file.model;
    YAML::Emitter out;
    out << YAML::BeginMap;
    if (!file.name.empty()) out << YAML::Key << "name" << YAML::Value << file.name;
    out << YAML::Key << "initial" << YAML::Value << m.state(m.initial()).name;

    if (!m.parameters().empty()) {
        out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
        std::vector<ParamName> order = file.parameter_order;
        for (const auto& [name, _] : m.parameters()) {
            if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
        }
        for (const auto& name : order) {
            out << YAML::Key << name << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "box" << YAML::Value;
            emit_interval(out, m.parameters().at(name));
            if (auto it = file.priors.find(name); it != file.priors.end()) {
                out << YAML::Key << "prior" << YAML::Value;
                emit_prior(out, it->second);
            }
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }

    out << YAML::Key << "states" << YAML::Value << YAML::BeginSeq;
    for (std::uint32_t i = 0; i < m.size(); ++i) {
        const State& s = m.states()[i];
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << s.name;
        if (!s.labels.empty()) {
            out << YAML::Key << "labels" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (const auto& l : s.labels) out << l;
            out << YAML::EndSeq;
        }
        out << YAML::Key << "layer" << YAML::Value << layer_name(s.tag.layer);
        if (s.tag.catastrophic) out << YAML::Key << "catastrophic" << YAML::Value << true;
        const auto& acts = m.actions(StateId{i});
        if (acts.empty()) {
            out << YAML::Key << "transitions" << YAML::Value;
            emit_row(out, m, m.row(StateId{i}));
        } else if (acts.size() == 1 && acts.front().weight == 1) {
            if (acts.front().action != "-") out << YAML::Key << "action" << YAML::Value << acts.front().action;
            out << YAML::Key << "transitions" << YAML::Value;
            emit_row(out, m, acts.front().row);
        } else {
            out << YAML::Key << "actions" << YAML::Value << YAML::BeginSeq;
            for (const auto& a : acts) {
                out << YAML::BeginMap;
                out << YAML::Key << "name" << YAML::Value << a.action;
                out << YAML::Key << "weight" << YAML::Value << exact_text(a.weight);
                out << YAML::Key << "to" << YAML::Value;
                emit_row(out, m, a.row);
                out << YAML::EndMap;
            }
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    if (!file.queries.empty()) {
        out << YAML::Key << "queries" << YAML::Value << YAML::BeginSeq;
        for (const auto& q : file.queries) {
            out << YAML::BeginMap;
            out << YAML::Key << "id" << YAML::Value << q.query.id;
            out << YAML::Key << "initial" << YAML::Value << m.state(q.query.initial).name;
            out << YAML::Key << "target" << YAML::Value << q.query.target_label;
            out << YAML::Key << "form" << YAML::Value << to_string(q.query.form);
            if (q.query.constraint_label) out << YAML::Key << "constraint" << YAML::Value << *q.query.constraint_label;
            if (q.query.form == QueryForm::BoundedUntil) out << YAML::Key << "bound" << YAML::Value << q.query.bound;
            out << YAML::Key << "runtime" << YAML::Value << q.runtime_id;
            if (q.threshold) {
                out << YAML::Key << "threshold" << YAML::Value << YAML::Flow << YAML::BeginMap;
                out << YAML::Key << "direction" << YAML::Value << to_string(q.threshold->direction);
                out << YAML::Key << "value" << YAML::Value << exact_text(q.threshold->value);
                out << YAML::EndMap;
            }
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }

    if (file.truth) {
        out << YAML::Key << "truth" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "values" << YAML::Value << YAML::BeginMap;
        for (const auto& [name, v] : file.truth->values) out << YAML::Key << name << YAML::Value << exact_text(v);
        out << YAML::EndMap;
        if (file.truth->gamma_site) {
            out << YAML::Key << "gamma" << YAML::Value << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "state" << YAML::Value << file.truth->gamma_site->state;
            out << YAML::Key << "action" << YAML::Value << file.truth->gamma_site->action;
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string model_hash(const ModelFile& file) {
    std::string text = serialize_model(file);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

void check_run_config(const RunConfig& c) {
    if (c.gamma_range.lo < 0 || c.gamma_range.hi > 1 || c.gamma_range.lo > c.gamma_range.hi) {
        throw ValidationError("gamma range must satisfy 0 <= lo <= hi <= 1");
    }
    if (c.step_cap == 0) throw ValidationError("step cap must be positive");
    if (c.candidates == 0) throw ValidationError("candidates must be positive");
    if (c.monitor.window == 0) throw ValidationError("persistence window must be positive");
    if (!(c.monitor.alpha > 0 && c.monitor.alpha <= 1)) throw ValidationError("alpha must lie in (0, 1]");
}

RunConfig parse_run_config(std::string_view text, RunConfig c) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0);
    }
    if (root.IsNull()) return c;
    allow_keys(root,
               {"seed", "n_missions", "gamma_range", "step_cap", "candidates", "window", "alpha", "quorum", "cbi_box",
                "out"},
               "run configuration");
    if (root["seed"]) c.seed = count(root["seed"], "seed");
    if (root["n_missions"]) c.n_missions = count(root["n_missions"], "n_missions");
    if (root["gamma_range"]) c.gamma_range = interval(root["gamma_range"], "gamma_range");
    if (root["step_cap"]) c.step_cap = count(root["step_cap"], "step_cap");
    if (root["candidates"]) c.candidates = count(root["candidates"], "candidates");
    if (root["window"]) c.monitor.window = count(root["window"], "window");
    if (root["quorum"]) c.monitor.quorum = count(root["quorum"], "quorum");
    if (root["alpha"]) c.monitor.alpha = to_double(rational(root["alpha"], "alpha"));
    if (root["cbi_box"]) {
        std::string mode = scalar(root["cbi_box"], "cbi_box");
        if (mode == "range") {
            c.monitor.cbi_box = CbiBoxMode::Range;
        } else if (mode == "point") {
            c.monitor.cbi_box = CbiBoxMode::Point;
        } else {
            fail(root["cbi_box"], "cbi_box must be range or point");
        }
    }
    if (root["out"]) c.out_dir = scalar(root["out"], "out");
    check_run_config(c);
    return c;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

}  // namespace pmca
