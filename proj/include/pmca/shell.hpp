#pragma once

// File formats and the end-to-end pipeline plumbing: the YAML model file, run configuration,
// the JSON Lines trace log, the closed-form cache and runtime-prior files, and the monitor's
// verdict, conflict and series outputs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmca/dtmc.hpp"
#include "pmca/monitor.hpp"
#include "pmca/simulator.hpp"

namespace pmca {

/// Everything a model file declares. `parameter_order` is the declaration order, used for
/// table columns and series headers.
struct ModelFile {
    std::string name;
    Dtmc model;
    std::vector<ParamName> parameter_order;
    PriorTable priors;  // may be empty for models that are only checked
    std::vector<QuerySpec> queries;
    std::optional<GroundTruth> truth;

    friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

/// Parses the YAML model format. Throws ParseError (with a 1-based line) for malformed or
/// unknown content and ValidationError when the parsed chain or its priors do not validate.
ModelFile parse_model(std::string_view text);
ModelFile load_model(const std::filesystem::path& path);

/// Canonical YAML: fixed key order, exact rationals, comments dropped. parse_model of the
/// result reproduces the same ModelFile.
std::string serialize_model(const ModelFile& file);

/// Queries that have closed forms (everything except bounded until), in file order.
std::vector<QuerySpec> cacheable_queries(const ModelFile& file);

/// Lowercase hex SHA-256 of the canonical serialization.
std::string model_hash(const ModelFile& file);

/// Exact text for a rational: a terminating decimal when one exists, otherwise "p/q".
std::string exact_text(const Rational& value);

/// Output numerics: 6 significant digits, or the exact fraction when `exact`.
std::string format_number(const Rational& value, bool exact);

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t n_missions = 49;
    Interval gamma_range{Rational(5, 8), Rational(7, 8)};
    std::uint64_t step_cap = kDefaultStepCap;
    std::size_t candidates = 20;  // missions simulated when selecting the longest one
    MonitorConfig monitor;
    std::string out_dir = ".";

    friend bool operator==(const RunConfig& a, const RunConfig& b) {
        return a.seed == b.seed && a.n_missions == b.n_missions && a.gamma_range == b.gamma_range &&
               a.step_cap == b.step_cap && a.candidates == b.candidates && a.out_dir == b.out_dir &&
               a.monitor.window == b.monitor.window && a.monitor.alpha == b.monitor.alpha &&
               a.monitor.quorum == b.monitor.quorum && a.monitor.cbi_box == b.monitor.cbi_box;
    }
};

/// YAML run configuration; absent keys keep `defaults`. Throws ParseError / ValidationError.
RunConfig parse_run_config(std::string_view text, RunConfig defaults = {});
void check_run_config(const RunConfig& config);

// Trace log: a header line {"type": "campaign", ...} followed by one event per line.

/// Free-form header annotations such as an injected fault, written as string fields.
using TraceNotes = std::map<std::string, std::string>;

std::string write_trace(const Dtmc& m, const Campaign& campaign, const TraceNotes& notes = {});

/// Reads a trace log. The header line is optional; without it missions are grouped by id in
/// order of appearance. Throws ParseError (with line) on malformed lines and ChainError when
/// events name unknown states or actions or fail to chain.
Campaign read_trace(const Dtmc& m, std::string_view text);

// Closed-form cache and runtime priors, both bound to a model hash.

std::string write_cache(const ModelFile& file, const ClosedFormCache& cache);
/// Throws ValidationError on a hash mismatch or a cache missing a configured query.
ClosedFormCache read_cache(const ModelFile& file, std::string_view text);

std::string write_priors(const ModelFile& file, const PriorTable& priors);
PriorTable read_priors(const ModelFile& file, std::string_view text);

// Monitor outputs.

std::string series_header(const ModelFile& file);
std::string series_row(const ModelFile& file, const StepRecord& record, bool exact);
std::string verdict_line(const Verdict& verdict, bool exact);
std::string conflict_line(const StepRecord& record);

/// Pre-mission table in the layout of the reference table: pseudo-count, prior estimate and
/// posterior estimate rows, one column per parameter, followed by the query bounds.
std::string premission_table(const ModelFile& file, const PremissionReport& report, bool exact);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace pmca
