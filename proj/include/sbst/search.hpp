#pragma once

// Falsification loop: sample a valuation, produce a stimulus, simulate,
// score the output, stop at the first score below the threshold or when the
// budget runs out. Campaigns repeat the loop over independently seeded runs.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sbst/assessment.hpp"
#include "sbst/plant.hpp"
#include "sbst/testseq.hpp"

namespace sbst {

enum class Solver { UniformRandom };

struct SearchConfig {
    Solver solver = Solver::UniformRandom;
    int max_iterations = 50;
    int runs = 10;
    std::uint64_t seed = 1;
    double threshold = 0.0;
    /// Optional per-run wall-clock budget in seconds.
    std::optional<double> time_budget;
};

void check_config(const SearchConfig& cfg);

using Rng = std::mt19937_64;

/// Seed of run `run_index`, a pure function of (seed, run_index).
std::uint64_t derive_run_seed(std::uint64_t seed, int run_index);

/// Draws every parameter independently and uniformly on [lower, upper].
Valuation sample_uniform(std::span<const ParamSpec> params, Rng& rng);

/// Outcome of scoring one valuation.
struct Score {
    double fitness = 0.0;
    bool vacuous = false;
    bool errored = false;
};

using FitnessFunction = std::function<Score(const Valuation&)>;

/// A search space plus the function to minimise.
struct Problem {
    std::vector<ParamSpec> params;
    FitnessFunction fitness;
};

/// instantiate -> generate_signal -> simulate -> evaluate over a 35 s horizon.
/// A non-finite simulation scores +inf with `errored` set.
Problem make_problem(ParameterizedTestSequence pts, Assessment assessment, ControllerKind kind, PlantParams params,
                     double threshold = 0.0, double horizon = kBenchmarkHorizon);

/// The stimulus and plant response for one valuation.
Trace execute(const ParameterizedTestSequence& pts, const Valuation& v, ControllerKind kind, const PlantParams& params,
              double horizon = kBenchmarkHorizon);

struct IterationRecord {
    int index = 0;  // 1-based
    Valuation valuation;
    double fitness = 0.0;
    double wall_time = 0.0;  // seconds
    bool vacuous = false;
    bool errored = false;
};

struct RunResult {
    int run_index = 0;
    std::uint64_t seed = 0;
    bool falsified = false;
    /// Iterations executed, counting the falsifying one.
    int iterations_used = 0;
    IterationRecord best;
    std::vector<IterationRecord> records;
    int vacuous_count = 0;
    int error_count = 0;
    double wall_time = 0.0;
};

struct CampaignStats {
    double mean_iterations = 0.0;
    double median_iterations = 0.0;
    double mean_time = 0.0;
    double min_time = 0.0;
    double max_time = 0.0;
    double std_time = 0.0;  // sample standard deviation, 0 for a single run
};

struct CampaignResult {
    int fr_numerator = 0;
    int fr_denominator = 0;
    /// Over falsified runs only; absent when no run falsified.
    std::optional<CampaignStats> stats;
    std::vector<RunResult> runs;
};

RunResult falsify(const Problem& problem, const SearchConfig& cfg, int run_index);

/// Runs cfg.runs independent runs (indices 1..runs) on up to `jobs` threads. The result does
/// not depend on `jobs` or on completion order.
CampaignResult campaign(const Problem& problem, const SearchConfig& cfg, int jobs = 1);

/// Aggregates runs (sorted by run index) into FR and falsified-run statistics.
CampaignResult aggregate(std::vector<RunResult> runs);

}  // namespace sbst
