#pragma once

// Benchmark front end: experiment matrices, result files and trace export.
//
// Output layout of a matrix run:
//   <out>/<model>-<assessment>-<pts>/run-<k>.json   per-run records
//   <out>/results.csv                               deterministic, one row per run
//   <out>/table.txt                                 FR / mean / median per experiment
//   <out>/metadata.json                             wall-clock timings

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbst/assessment.hpp"
#include "sbst/plant.hpp"
#include "sbst/search.hpp"
#include "sbst/testseq.hpp"

namespace sbst {

struct ExperimentSpec {
    ControllerKind model = ControllerKind::Pwm;
    std::string assessment;  // built-in name or path to a JSON document
    std::string pts;         // built-in name or path to a JSON document
    SearchConfig cfg;
    double r3_margin = kDefaultR3Margin;
    std::optional<std::string> plant_overrides;  // JSON object text

    /// `<model>-<assessment>-<pts>`, file arguments reduced to their stem.
    std::string id() const;
};

struct MatrixSpec {
    std::vector<ExperimentSpec> experiments;
};

/// 2 models x {r1, r2, r3} x six built-in sequences with the shared config.
MatrixSpec default_matrix(const SearchConfig& cfg, double r3_margin = kDefaultR3Margin);

/// JSON document:
///   { "config": {"runs", "max_iterations", "seed", "threshold", "r3_margin"},
///     "models": [...], "assessments": [...], "pts": [...],      (cross product)
///     "experiments": [{"model", "assessment", "pts"}, ...],     (explicit list)
///     "plant": {"pwm": {...overrides}, "buck": {...}} }
/// Either form may be used; both are concatenated. Missing cross-product axes
/// default to the full benchmark axis. An empty result is an error.
MatrixSpec parse_matrix_spec(std::string_view json_text);
MatrixSpec load_matrix_spec(const std::string& path);

ParameterizedTestSequence resolve_pts(const std::string& name_or_path);
Assessment resolve_assessment(const std::string& name_or_path, double r3_margin);
PlantParams resolve_plant(ControllerKind model, const std::optional<std::string>& overrides);
Problem make_problem(const ExperimentSpec& spec);

struct ExperimentResult {
    ExperimentSpec spec;
    CampaignResult campaign;
};

/// One row of results.csv.
struct ResultRow {
    std::string model;
    std::string assessment;
    std::string pts;
    int run = 0;
    std::uint64_t seed = 0;
    bool falsified = false;
    int iterations = 0;
    double best_fitness = 0.0;
};

inline constexpr const char* kResultsHeader = "model,assessment,pts,run,seed,falsified,iterations,best_fitness";

std::vector<ResultRow> result_rows(const std::vector<ExperimentResult>& results);
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(std::istream& in);

/// Per-experiment aggregate reconstructed from rows, in first-seen order.
struct ExperimentSummary {
    std::string model;
    std::string assessment;
    std::string pts;
    CampaignResult campaign;  // runs carry only run/seed/falsified/iterations/best
};
std::vector<ExperimentSummary> summarize(const std::vector<ResultRow>& rows);

/// Rows per (model, pts), column groups per assessment: FR as x/y, mean and
/// median iterations with one decimal, dashes when nothing was falsified.
std::string render_table(const std::vector<ExperimentSummary>& summaries);

std::string run_record_json(const ExperimentSpec& spec, const RunResult& run);

/// Runs every experiment, writes the output layout above under `out_dir`.
std::vector<ExperimentResult> run_matrix(const MatrixSpec& spec, const std::string& out_dir, int jobs,
                                         std::ostream& log);

/// Simulates one valuation and writes the trace CSV. Returns the trace.
Trace emit_trace(ControllerKind model, const ParameterizedTestSequence& pts, const Valuation& v,
                 const PlantParams& params, const std::string& path);

/// Exit codes of the command-line front end.
inline constexpr int kExitFalsified = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotFalsified = 4;

/// One campaign; prints FR, iteration statistics and best fitness, writes run
/// records and (when some run falsified) the falsifying trace under out_dir.
/// Returns kExitFalsified or kExitNotFalsified.
int run_single(const ExperimentSpec& spec, const std::string& out_dir, int jobs, std::ostream& log);

}  // namespace sbst
