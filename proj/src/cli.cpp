#include "pmca/cli.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "pmca/error.hpp"
#include "pmca/monitor.hpp"
#include "pmca/paramcheck.hpp"
#include "pmca/shell.hpp"

namespace pmca {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string model;
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    bool exact = false;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--model", o.model, "Model file (YAML)")->required();
    cmd->add_option("--config", o.config, "Run configuration file (YAML)");
    o.seed_opt = cmd->add_option("--seed", o.seed, "Random seed");
    o.out_opt = cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--exact", o.exact, "Print exact fractions instead of 6 significant digits");
}

RunConfig load_config(const CommonOptions& o) {
    RunConfig c;
    if (!o.config.empty()) c = parse_run_config(read_file(o.config));
    if (o.seed_opt->count()) c.seed = o.seed;
    if (o.out_opt->count()) c.out_dir = o.out;
    return c;
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* flag) {
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw CLI::ValidationError(flag, "expected name=value, got '" + text + "'");
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

Rational cli_rational(const std::string& text, const char* flag) {
    try {
        return parse_rational(text);
    } catch (const std::invalid_argument&) {
        throw CLI::ValidationError(flag, "'" + text + "' is not a number");
    }
}

Interval cli_interval(const std::string& text, const char* flag) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError(flag, "expected lo:hi, got '" + text + "'");
    Interval iv{cli_rational(text.substr(0, colon), flag), cli_rational(text.substr(colon + 1), flag)};
    if (iv.lo > iv.hi) throw CLI::ValidationError(flag, "lower end exceeds upper end in '" + text + "'");
    return iv;
}

/// A YAML mapping of parameter name to [lo, hi] or a single value.
ParamBox read_box_file(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::Load(read_file(path));
    } catch (const YAML::ParserException& e) {
        throw ParseError(path + ": " + e.msg, e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0);
    }
    if (!root.IsMap()) throw ParseError(path + ": box file must map parameter names to [lo, hi]");
    ParamBox box;
    for (const auto& kv : root) {
        std::string name = kv.first.as<std::string>();
        std::size_t line = static_cast<std::size_t>(kv.first.Mark().line) + 1;
        try {
            if (kv.second.IsScalar()) {
                box.emplace(name, Interval::point(parse_rational(kv.second.Scalar())));
            } else if (kv.second.IsSequence() && kv.second.size() == 2) {
                Interval iv{parse_rational(kv.second[0].Scalar()), parse_rational(kv.second[1].Scalar())};
                if (iv.lo > iv.hi) throw ParseError(path + ": lower end exceeds upper end for '" + name + "'", line);
                box.emplace(name, iv);
            } else {
                throw ParseError(path + ": '" + name + "' needs a value or [lo, hi]", line);
            }
        } catch (const std::invalid_argument&) {
            throw ParseError(path + ": '" + name + "' is not numeric", line);
        }
    }
    return box;
}

std::string monotonicity_text(const ClosedForm& cf) {
    std::string out;
    for (const auto& [name, mono] : cf.monotonicity) {
        if (!out.empty()) out += ", ";
        out += name + " " + to_string(mono);
    }
    return out.empty() ? "(no parameters)" : out;
}

struct CheckOptions {
    CommonOptions common;
    std::vector<std::string> set;
    std::vector<std::string> intervals;
    std::string box_file;
    bool truth = false;
};

int cmd_check(const CheckOptions& o, std::ostream& out) {
    ModelFile file = load_model(o.common.model);
    load_config(o.common);
    const Dtmc& m = file.model;
    bool exact = o.common.exact;
    bool any_violated = false;

    if (o.truth || !o.set.empty()) {
        Valuation v;
        if (o.truth) {
            if (!file.truth) throw ValidationError("model has no truth block");
            v = file.truth->values;
        }
        for (const auto& s : o.set) {
            auto [name, value] = split_assignment(s, "--set");
            if (!m.parameters().count(name)) throw ValidationError("--set names undeclared parameter '" + name + "'");
            v.insert_or_assign(name, cli_rational(value, "--set"));
        }
        for (const auto& [name, iv] : m.parameters()) {
            if (!v.count(name)) throw ValidationError("no value for parameter '" + name + "'");
            if (!iv.contains(v.at(name))) throw ValidationError("value of '" + name + "' lies outside its declared box");
        }
        for (const auto& q : file.queries) {
            Rational p;
            if (q.query.form == QueryForm::BoundedUntil) {
                p = check_bounded(m, q.query, v);
                out << q.query.id << " = " << format_number(p, exact) << "\n";
            } else {
                ClosedForm cf = closed_form(m, q.query);
                p = cf.function.evaluate(v);
                out << q.query.id << " = " << format_number(p, exact) << "   f = " << cf.function.to_string() << "\n";
                for (const auto& w : cf.warnings) out << "  warning: " << w << "\n";
            }
            if (q.threshold) {
                Verdict verdict = make_verdict(m, q, 0, BoundResult{Interval::point(p), true, false});
                out << "  " << to_string(q.threshold->direction) << " " << format_number(q.threshold->value, exact) << ": "
                    << to_string(verdict.status) << "\n";
                any_violated = any_violated || verdict.status == VerdictStatus::Violated;
            }
        }
        return any_violated ? kExitThreshold : kExitOk;
    }

    ParamBox box = m.parameters();
    auto narrow = [&](const std::string& name, const Interval& iv) {
        auto it = box.find(name);
        if (it == box.end()) throw ValidationError("box names undeclared parameter '" + name + "'");
        if (!m.parameters().at(name).contains(iv)) {
            throw ValidationError("box for '" + name + "' leaves the declared range");
        }
        it->second = iv;
    };
    if (!o.box_file.empty()) {
        for (const auto& [name, iv] : read_box_file(o.box_file)) narrow(name, iv);
    }
    for (const auto& s : o.intervals) {
        auto [name, value] = split_assignment(s, "--interval");
        narrow(name, cli_interval(value, "--interval"));
    }
    for (const auto& q : file.queries) {
        if (q.query.form == QueryForm::BoundedUntil) {
            out << q.query.id << ": bounded until needs a point valuation (--set or --truth)\n";
            continue;
        }
        ClosedForm cf = analyze_monotonicity(closed_form(m, q.query), box);
        BoundResult b = bound_evaluate(cf, box, box);
        out << q.query.id << " in [" << format_number(b.bounds.lo, exact) << ", " << format_number(b.bounds.hi, exact)
            << "]" << (b.conservative ? " (conservative enclosure)" : "") << "\n";
        out << "  f = " << cf.function.to_string() << "\n";
        out << "  monotonicity: " << monotonicity_text(cf) << "\n";
        for (const auto& w : cf.warnings) out << "  warning: " << w << "\n";
        if (q.threshold) {
            Verdict verdict = make_verdict(m, q, 0, b);
            out << "  " << to_string(q.threshold->direction) << " " << format_number(q.threshold->value, exact) << ": "
                << to_string(verdict.status) << "\n";
            any_violated = any_violated || verdict.status == VerdictStatus::Violated;
        }
    }
    return any_violated ? kExitThreshold : kExitOk;
}

struct SimulateOptions {
    CommonOptions common;
    std::size_t missions = 0;
    CLI::Option* missions_opt = nullptr;
    std::uint64_t step_cap = 0;
    CLI::Option* step_cap_opt = nullptr;
    std::string gamma_range;
    bool single = false;
    std::string gamma;
    std::size_t candidates = 0;
    CLI::Option* candidates_opt = nullptr;
    std::uint32_t mission_id = 0;
    std::vector<std::string> set;
    std::string mislabel;
    std::string file_name;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    ModelFile file = load_model(o.common.model);
    RunConfig c = load_config(o.common);
    if (o.missions_opt->count()) c.n_missions = o.missions;
    if (o.step_cap_opt->count()) c.step_cap = o.step_cap;
    if (o.candidates_opt->count()) c.candidates = o.candidates;
    if (!o.gamma_range.empty()) c.gamma_range = cli_interval(o.gamma_range, "--gamma-range");
    check_run_config(c);
    if (!file.truth) throw ValidationError("model has no truth block; simulation needs one");
    GroundTruth truth = *file.truth;
    for (const auto& s : o.set) {
        auto [name, value] = split_assignment(s, "--set");
        if (!truth.values.count(name)) throw ValidationError("--set names unknown parameter '" + name + "'");
        truth.values[name] = cli_rational(value, "--set");
    }
    check_truth(file.model, truth);

    Campaign campaign;
    campaign.seed = c.seed;
    campaign.truth = truth.values;
    TraceNotes notes;
    std::string name = o.file_name;
    if (o.single) {
        Rational gamma(1);
        if (!o.gamma.empty()) {
            gamma = cli_rational(o.gamma, "--gamma");
        } else if (truth.gamma_site) {
            StateId s = file.model.state_id(truth.gamma_site->state);
            for (const auto& a : file.model.actions(s)) {
                if (a.action == truth.gamma_site->action) gamma = a.weight;
            }
        }
        std::uint32_t id = o.mission_id ? o.mission_id : static_cast<std::uint32_t>(c.n_missions + 1);
        Mission mission = longest_mission(file.model, truth, gamma, c.candidates, c.seed, id, c.step_cap);
        if (!o.mislabel.empty()) {
            std::vector<std::string> parts;
            std::stringstream ss(o.mislabel);
            for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
            if (parts.size() < 2 || parts.size() > 4) {
                throw CLI::ValidationError("--mislabel", "expected actual:believed[:onset[:duration]]");
            }
            MislabelFault fault{parts[0], parts[1]};
            if (parts.size() > 2) fault.onset_step = std::stoull(parts[2]);
            if (parts.size() > 3) fault.duration = std::stoull(parts[3]);
            mission = inject_mislabel(file.model, mission, fault, sub_seed(c.seed, 0xfa017));
            notes["fault"] = "mislabel " + o.mislabel;
        }
        campaign.missions.push_back(std::move(mission));
        if (name.empty()) name = "mission.jsonl";
    } else {
        if (!o.mislabel.empty()) throw CLI::ValidationError("--mislabel", "fault injection applies to --single missions");
        campaign = generate_campaign(file.model, truth, c.n_missions, c.gamma_range, c.seed, c.step_cap);
        if (name.empty()) name = "campaign.jsonl";
    }
    fs::path path = fs::path(c.out_dir) / name;
    write_file(path, write_trace(file.model, campaign, notes));

    std::size_t events = 0;
    std::size_t truncated = 0;
    for (const auto& mission : campaign.missions) {
        events += mission.events.size();
        truncated += mission.truncated;
    }
    out << "wrote " << path.string() << ": " << campaign.missions.size() << " mission(s), " << events << " events, "
        << truncated << " truncated (seed " << c.seed << ", " << campaign.generator << ")\n";
    return kExitOk;
}

struct PremissionOptions {
    CommonOptions common;
    std::string trace;
    std::string cbi_box;
};

CbiBoxMode parse_cbi_box(const std::string& text) {
    if (text == "range") return CbiBoxMode::Range;
    if (text == "point") return CbiBoxMode::Point;
    throw CLI::ValidationError("--cbi-box", "expected range or point");
}

int cmd_premission(const PremissionOptions& o, std::ostream& out) {
    ModelFile file = load_model(o.common.model);
    RunConfig c = load_config(o.common);
    if (!o.cbi_box.empty()) c.monitor.cbi_box = parse_cbi_box(o.cbi_box);
    if (file.priors.empty()) throw ValidationError("model declares no priors");
    Campaign previous;
    if (!o.trace.empty()) previous = read_trace(file.model, read_file(o.trace));
    CountTable counts = count_transitions(previous.missions);

    std::vector<QuerySpec> queries = cacheable_queries(file);
    ClosedFormCache cache = build_cache(file.model, queries, model_hash(file));
    PremissionReport report = premission_verify(file.model, file.priors, counts, queries, cache, c.monitor.cbi_box);
    PriorTable runtime = runtime_priors(file.model, file.priors, counts);

    fs::path dir(c.out_dir);
    write_file(dir / "cache.json", write_cache(file, cache));
    write_file(dir / "posterior.json", write_priors(file, runtime));

    out << "pre-mission estimates from " << previous.missions.size() << " previous mission(s)\n\n";
    out << premission_table(file, report, o.common.exact);
    out << "\nwrote " << (dir / "cache.json").string() << " and " << (dir / "posterior.json").string() << "\n";

    for (const auto& q : queries) {
        if (!q.threshold) continue;
        if (make_verdict(file.model, q, 0, report.bounds.at(q.query.id)).status == VerdictStatus::Violated) {
            return kExitThreshold;
        }
    }
    return kExitOk;
}

struct MonitorOptions {
    CommonOptions common;
    std::string trace;
    std::string cache;
    std::string posterior;
    std::uint32_t mission = 0;
    std::size_t window = 0;
    CLI::Option* window_opt = nullptr;
    double alpha = 0;
    CLI::Option* alpha_opt = nullptr;
    std::size_t quorum = 0;
    CLI::Option* quorum_opt = nullptr;
    std::string cbi_box;
};

int cmd_monitor(const MonitorOptions& o, std::ostream& out) {
    ModelFile file = load_model(o.common.model);
    RunConfig c = load_config(o.common);
    if (o.window_opt->count()) c.monitor.window = o.window;
    if (o.alpha_opt->count()) c.monitor.alpha = o.alpha;
    if (o.quorum_opt->count()) c.monitor.quorum = o.quorum;
    if (!o.cbi_box.empty()) c.monitor.cbi_box = parse_cbi_box(o.cbi_box);
    check_run_config(c);

    fs::path dir(c.out_dir);
    fs::path cache_path = o.cache.empty() ? dir / "cache.json" : fs::path(o.cache);
    fs::path priors_path = o.posterior.empty() ? dir / "posterior.json" : fs::path(o.posterior);
    ClosedFormCache cache = read_cache(file, read_file(cache_path));
    PriorTable priors = read_priors(file, read_file(priors_path));

    Campaign trace = read_trace(file.model, read_file(o.trace));
    if (trace.missions.empty()) throw ChainError("trace holds no mission");
    const Mission* mission = &trace.missions.front();
    if (o.mission) {
        auto it = std::find_if(trace.missions.begin(), trace.missions.end(),
                               [&](const Mission& m) { return m.id == o.mission; });
        if (it == trace.missions.end()) throw ChainError("trace has no mission " + std::to_string(o.mission));
        mission = &*it;
    } else if (trace.missions.size() > 1) {
        throw CLI::ValidationError("--mission", "trace holds several missions; choose one with --mission");
    }

    Monitor monitor(file.model, priors, cacheable_queries(file), cache, c.monitor);
    bool exact = o.common.exact;
    std::string series = series_header(file) + "\n";
    std::string verdicts;
    std::string conflicts;
    std::map<ConflictClass, std::uint64_t> first_alarm;
    auto emit = [&](const StepRecord& r) {
        series += series_row(file, r, exact) + "\n";
        for (const auto& v : r.verdicts) verdicts += verdict_line(v, exact) + "\n";
        conflicts += conflict_line(r) + "\n";
        if (r.conflict.classification != ConflictClass::None) first_alarm.emplace(r.conflict.classification, r.step);
    };
    StepRecord last = monitor.initial_record();
    emit(last);
    for (const auto& e : mission->events) {
        last = monitor.ingest(e);
        emit(last);
    }
    write_file(dir / "series.csv", series);
    write_file(dir / "verdicts.jsonl", verdicts);
    write_file(dir / "conflicts.jsonl", conflicts);

    out << "mission " << mission->id << ": " << mission->events.size() << " events, final state "
        << file.model.state(last.state).name << "\n";
    bool violated = false;
    for (const auto& v : last.verdicts) {
        out << "  " << v.query << " in [" << format_number(v.bounds.lo, exact) << ", " << format_number(v.bounds.hi, exact)
            << "]  " << to_string(v.status) << " (" << to_string(v.hint) << ")\n";
        violated = violated || v.status == VerdictStatus::Violated;
    }
    for (const auto& [cls, step] : first_alarm) out << "  first " << to_string(cls) << " alarm at step " << step << "\n";
    for (const auto& p : last.regime_violations) {
        out << "  CBI regime violated for '" << p << "': a catastrophic transition was observed\n";
    }
    out << "wrote " << (dir / "series.csv").string() << ", verdicts.jsonl, conflicts.jsonl\n";
    return violated ? kExitThreshold : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Parametric model checking with Bayesian runtime monitoring", "pmca"};
    app.require_subcommand(1);

    CheckOptions check;
    CLI::App* c = app.add_subcommand("check", "Closed-form query results at a valuation or over a box");
    add_common(c, check.common);
    c->add_option("--set", check.set, "Parameter value name=value (repeatable)");
    c->add_option("--interval", check.intervals, "Parameter range name=lo:hi (repeatable)");
    c->add_option("--box-file", check.box_file, "YAML map of parameter to [lo, hi] or a value");
    c->add_flag("--truth", check.truth, "Evaluate at the model's truth values");

    SimulateOptions sim;
    CLI::App* s = app.add_subcommand("simulate", "Write a simulated campaign or a single mission trace");
    add_common(s, sim.common);
    sim.missions_opt = s->add_option("--missions", sim.missions, "Number of missions (default 49)");
    sim.step_cap_opt = s->add_option("--step-cap", sim.step_cap, "Maximum events per mission");
    s->add_option("--gamma-range", sim.gamma_range, "Per-mission policy weight range lo:hi");
    s->add_flag("--single", sim.single, "Simulate one mission: the longest of --candidates at a fixed weight");
    s->add_option("--gamma", sim.gamma, "Policy weight for --single (default: the model's declared weight)");
    sim.candidates_opt = s->add_option("--candidates", sim.candidates, "Candidate missions for --single");
    s->add_option("--mission-id", sim.mission_id, "Mission id for --single (default missions + 1)");
    s->add_option("--set", sim.set, "Override a truth value name=value (repeatable)");
    s->add_option("--mislabel", sim.mislabel, "Inject a state mislabel fault actual:believed[:onset[:duration]]");
    s->add_option("--file", sim.file_name, "Output file name inside --out");

    PremissionOptions pre;
    CLI::App* p = app.add_subcommand("premission", "Posterior table, pre-mission bounds and closed-form cache");
    add_common(p, pre.common);
    p->add_option("--trace", pre.trace, "Trace log of previous missions");
    p->add_option("--cbi-box", pre.cbi_box, "Catastrophic parameter box: range ([0, bound]) or point");

    MonitorOptions mon;
    CLI::App* r = app.add_subcommand("monitor", "Replay a mission through the runtime monitor");
    add_common(r, mon.common);
    r->add_option("--trace", mon.trace, "Mission trace log")->required();
    r->add_option("--cache", mon.cache, "Closed-form cache (default <out>/cache.json)");
    r->add_option("--posterior", mon.posterior, "Runtime priors (default <out>/posterior.json)");
    r->add_option("--mission", mon.mission, "Mission id when the trace holds several");
    mon.window_opt = r->add_option("--window", mon.window, "Persistence window in row updates");
    mon.alpha_opt = r->add_option("--alpha", mon.alpha, "Significance level of the conflict test (1 keeps raw flags)");
    mon.quorum_opt = r->add_option("--quorum", mon.quorum, "Parameters of one state needed for unknown-unknown (0 = all)");
    r->add_option("--cbi-box", mon.cbi_box, "Catastrophic parameter box: range or point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c->parsed()) return cmd_check(check, out);
        if (s->parsed()) return cmd_simulate(sim, out);
        if (p->parsed()) return cmd_premission(pre, out);
        return cmd_monitor(mon, out);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const EvaluationError& e) {
        err << "evaluation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ChainError& e) {
        err << "chain error: " << e.what() << "\n";
        return kExitChain;
    } catch (const CbiRegimeViolated& e) {
        err << "CBI regime violated: " << e.what() << "\n";
        return kExitCbiRegime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace pmca
