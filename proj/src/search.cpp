#include "sbst/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "sbst/error.hpp"

namespace sbst {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Uniform on [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit_draw(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void check_config(const SearchConfig& cfg) {
    if (cfg.max_iterations < 1) throw Error("search: max_iterations must be >= 1");
    if (cfg.runs < 1) throw Error("search: runs must be >= 1");
    if (!std::isfinite(cfg.threshold)) throw Error("search: threshold must be finite");
    if (cfg.time_budget && !(*cfg.time_budget > 0.0)) throw Error("search: time budget must be positive");
}

std::uint64_t derive_run_seed(std::uint64_t seed, int run_index) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(run_index));
}

Valuation sample_uniform(std::span<const ParamSpec> params, Rng& rng) {
    Valuation v;
    for (const auto& p : params) {
        if (!(p.lower <= p.upper)) throw Error("sample_uniform: invalid bounds for '" + p.name + "'");
        const double u = unit_draw(rng);
        v[p.name] = p.lower == p.upper ? p.lower : std::min(p.upper, p.lower + u * (p.upper - p.lower));
    }
    return v;
}

Trace execute(const ParameterizedTestSequence& pts, const Valuation& v, ControllerKind kind, const PlantParams& params,
              double horizon) {
    const auto ts = instantiate(pts, v);
    const auto stimulus = generate_signal(ts, TimeGrid::covering(horizon, params.dt));
    return simulate(kind, stimulus, params);
}

Problem make_problem(ParameterizedTestSequence pts, Assessment assessment, ControllerKind kind, PlantParams params,
                     double threshold, double horizon) {
    if (const auto diags = validate(pts); !diags.empty()) {
        throw Error("test sequence '" + pts.name + "' is invalid: " + diags.front());
    }
    if (const auto diags = validate(assessment); !diags.empty()) {
        throw Error("assessment '" + assessment.name + "' is invalid: " + diags.front());
    }
    check_params(params);
    Problem problem;
    problem.params = pts.params;
    problem.fitness = [pts = std::move(pts), assessment = std::move(assessment), kind, params, threshold,
                       horizon](const Valuation& v) -> Score {
        std::optional<Trace> trace;
        try {
            trace = execute(pts, v, kind, params, horizon);
        } catch (const SimulationAbort&) {
        } catch (const EvalError&) {
        }
        if (!trace) return {std::numeric_limits<double>::infinity(), false, true};
        const Verdict verdict = evaluate(assessment, *trace, threshold);
        return {verdict.fitness, verdict.vacuous, false};
    };
    return problem;
}

RunResult falsify(const Problem& problem, const SearchConfig& cfg, int run_index) {
    check_config(cfg);
    RunResult run;
    run.run_index = run_index;
    run.seed = derive_run_seed(cfg.seed, run_index);
    Rng rng(run.seed);

    const auto run_start = Clock::now();
    for (int i = 1; i <= cfg.max_iterations; ++i) {
        const auto iter_start = Clock::now();
        IterationRecord rec;
        rec.index = i;
        rec.valuation = sample_uniform(problem.params, rng);
        const Score score = problem.fitness(rec.valuation);
        rec.fitness = score.fitness;
        rec.vacuous = score.vacuous;
        rec.errored = score.errored;
        rec.wall_time = seconds_since(iter_start);

        run.vacuous_count += rec.vacuous ? 1 : 0;
        run.error_count += rec.errored ? 1 : 0;
        if (run.records.empty() || rec.fitness < run.best.fitness) run.best = rec;
        run.records.push_back(std::move(rec));
        run.iterations_used = i;

        if (run.records.back().fitness < cfg.threshold) {
            run.falsified = true;
            break;
        }
        if (cfg.time_budget && seconds_since(run_start) >= *cfg.time_budget) break;
    }
    run.wall_time = seconds_since(run_start);
    return run;
}

CampaignResult aggregate(std::vector<RunResult> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunResult& a, const RunResult& b) { return a.run_index < b.run_index; });
    CampaignResult result;
    result.fr_denominator = static_cast<int>(runs.size());
    std::vector<double> iterations;
    std::vector<double> times;
    for (const auto& r : runs) {
        if (!r.falsified) continue;
        ++result.fr_numerator;
        iterations.push_back(r.iterations_used);
        times.push_back(r.wall_time);
    }
    if (!iterations.empty()) {
        CampaignStats s;
        const double n = static_cast<double>(iterations.size());
        s.mean_iterations = std::accumulate(iterations.begin(), iterations.end(), 0.0) / n;
        std::sort(iterations.begin(), iterations.end());
        const std::size_t mid = iterations.size() / 2;
        s.median_iterations =
            iterations.size() % 2 == 1 ? iterations[mid] : 0.5 * (iterations[mid - 1] + iterations[mid]);
        s.mean_time = std::accumulate(times.begin(), times.end(), 0.0) / n;
        s.min_time = *std::min_element(times.begin(), times.end());
        s.max_time = *std::max_element(times.begin(), times.end());
        if (times.size() > 1) {
            double ss = 0.0;
            for (double t : times) ss += (t - s.mean_time) * (t - s.mean_time);
            s.std_time = std::sqrt(ss / (n - 1.0));
        }
        result.stats = s;
    }
    result.runs = std::move(runs);
    return result;
}

CampaignResult campaign(const Problem& problem, const SearchConfig& cfg, int jobs) {
    check_config(cfg);
    std::vector<RunResult> runs(static_cast<std::size_t>(cfg.runs));
    const int workers = std::clamp(jobs, 1, cfg.runs);
    if (workers == 1) {
        for (int k = 0; k < cfg.runs; ++k) runs[static_cast<std::size_t>(k)] = falsify(problem, cfg, k + 1);
        return aggregate(std::move(runs));
    }

    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int k = next++; k < cfg.runs; k = next++) {
                    runs[static_cast<std::size_t>(k)] = falsify(problem, cfg, k + 1);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return aggregate(std::move(runs));
}

}  // namespace sbst
