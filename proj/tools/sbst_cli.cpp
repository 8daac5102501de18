// sbst: falsification campaigns against the e-Bike surrogate.
//
//   sbst run      --model pwm --assessment r2 --pts t-pyramid-0 --seed 1
//   sbst matrix   [--spec matrix.json] --out results/
//   sbst simulate --model buck --pts rect-pulse-0 --param Hecate_sp=150 --out trace.csv
//   sbst validate [--pts file] [--assessment file] [--spec file] [--plant file]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sbst/error.hpp"
#include "sbst/format.hpp"
#include "sbst/harness.hpp"

namespace {

using namespace sbst;

struct SearchFlags {
    std::optional<int> runs;
    std::optional<int> max_iters;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::optional<double> time_budget;
    std::optional<double> r3_margin;
    bool entropy = false;
    int jobs = 1;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--runs", runs, "Independent runs per campaign")->check(CLI::PositiveNumber);
        cmd.add_option("--max-iters", max_iters, "Iteration budget per run")->check(CLI::PositiveNumber);
        cmd.add_option("--seed", seed, "Campaign seed (default 1)");
        cmd.add_option("--threshold", threshold, "Falsification threshold on fitness");
        cmd.add_option("--time-budget", time_budget, "Per-run wall-clock budget in seconds")->check(CLI::PositiveNumber);
        cmd.add_option("--r3-margin", r3_margin, "Additive margin of r3 in rpm");
        cmd.add_flag("--entropy", entropy, "Seed from the system entropy source");
        cmd.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    }

    void apply(SearchConfig& cfg, double& margin) const {
        if (runs) cfg.runs = *runs;
        if (max_iters) cfg.max_iterations = *max_iters;
        if (seed) cfg.seed = *seed;
        if (threshold) cfg.threshold = *threshold;
        if (time_budget) cfg.time_budget = *time_budget;
        if (r3_margin) margin = *r3_margin;
        check_config(cfg);
    }

    // One draw shared by every experiment of the invocation.
    void resolve_entropy() {
        if (!entropy) return;
        std::random_device rd;
        seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cerr << "seed " << *seed << "\n";
    }
};

std::optional<std::string> read_plant_file(const std::string& path) {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path);
    if (!in) throw Error("cannot open plant file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Valuation parse_params(const std::vector<std::string>& items) {
    Valuation v;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw Error("--param expects name=value, got '" + item + "'");
        try {
            v[item.substr(0, eq)] = parse_double(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error("--param '" + item + "': value is not a number");
        }
    }
    return v;
}

int validate_files(const std::string& pts, const std::string& assessment, const std::string& spec,
                   const std::string& plant) {
    int problems = 0;
    auto report = [&](const std::string& what, const std::vector<std::string>& diags) {
        for (const auto& d : diags) std::cout << what << ": " << d << "\n";
        if (diags.empty()) std::cout << what << ": ok\n";
        problems += static_cast<int>(diags.size());
    };
    if (!pts.empty()) report(pts, validate(resolve_pts(pts)));
    if (!assessment.empty()) report(assessment, validate(resolve_assessment(assessment, kDefaultR3Margin)));
    if (!spec.empty()) {
        const auto m = load_matrix_spec(spec);
        for (const auto& e : m.experiments) make_problem(e);
        report(spec, {});
    }
    if (!plant.empty()) {
        const auto text = read_plant_file(plant);
        resolve_plant(ControllerKind::Pwm, text);
        resolve_plant(ControllerKind::Buck, text);
        report(plant, {});
    }
    return problems == 0 ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Search-based falsification of the e-Bike surrogate controllers"};
    app.require_subcommand(1);

    std::string model = "pwm";
    std::string assessment;
    std::string pts;
    std::string out_dir = "sbst-out";
    std::string plant_file;
    std::string spec_file;
    std::vector<std::string> params;
    SearchFlags flags;

    auto* run = app.add_subcommand("run", "One falsification campaign");
    run->add_option("--model", model, "pwm or buck")->check(CLI::IsMember({"pwm", "buck"}));
    run->add_option("--assessment", assessment, "r1, r2, r3, fig3b or a JSON file")->required();
    run->add_option("--pts", pts, "Built-in sequence name or a JSON file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--plant", plant_file, "JSON object of plant parameter overrides");
    flags.add_to(*run);

    auto* matrix = app.add_subcommand("matrix", "Experiment matrix (default: the 36 benchmark campaigns)");
    matrix->add_option("--spec", spec_file, "Matrix spec file");
    matrix->add_option("--out", out_dir, "Output directory");
    flags.add_to(*matrix);

    std::string trace_out = "trace.csv";
    auto* simulate = app.add_subcommand("simulate", "Simulate one valuation and write the trace CSV");
    simulate->add_option("--model", model, "pwm or buck")->check(CLI::IsMember({"pwm", "buck"}));
    simulate->add_option("--pts", pts, "Built-in sequence name or a JSON file")->required();
    simulate->add_option("--param", params, "name=value, repeatable");
    simulate->add_option("--out", trace_out, "Trace CSV path");
    simulate->add_option("--plant", plant_file, "JSON object of plant parameter overrides");

    auto* check = app.add_subcommand("validate", "Check sequence, assessment, matrix or plant files");
    check->add_option("--pts", pts, "Sequence name or file");
    check->add_option("--assessment", assessment, "Assessment name or file");
    check->add_option("--spec", spec_file, "Matrix spec file");
    check->add_option("--plant", plant_file, "Plant overrides file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        flags.resolve_entropy();
        if (*run) {
            ExperimentSpec spec;
            spec.model = parse_controller_kind(model);
            spec.assessment = assessment;
            spec.pts = pts;
            spec.plant_overrides = read_plant_file(plant_file);
            flags.apply(spec.cfg, spec.r3_margin);
            return run_single(spec, out_dir, flags.jobs, std::cout);
        }
        if (*matrix) {
            SearchConfig cfg;
            double margin = kDefaultR3Margin;
            MatrixSpec m = spec_file.empty() ? default_matrix(cfg, margin) : load_matrix_spec(spec_file);
            for (auto& e : m.experiments) flags.apply(e.cfg, e.r3_margin);
            const auto results = run_matrix(m, out_dir, flags.jobs, std::cerr);
            std::cout << render_table(summarize(result_rows(results)));
            return 0;
        }
        if (*simulate) {
            const auto kind = parse_controller_kind(model);
            const auto trace = emit_trace(kind, resolve_pts(pts), parse_params(params),
                                          resolve_plant(kind, read_plant_file(plant_file)), trace_out);
            std::cout << trace_out << ": " << trace.grid().size() << " samples\n";
            return 0;
        }
        return validate_files(pts, assessment, spec_file, plant_file);
    } catch (const std::exception& e) {
        std::cerr << "sbst: error: " << e.what() << "\n";
        return kExitError;
    }
}
