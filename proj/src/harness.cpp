#include "sbst/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

bool contains(const std::vector<std::string>& names, const std::string& name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::string label(const std::string& name_or_path, const std::vector<std::string>& builtins) {
    if (contains(builtins, name_or_path)) return name_or_path;
    return fs::path(name_or_path).stem().string();
}

ordered_json number_or_inf(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

std::string one_decimal(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + dir.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string ExperimentSpec::id() const {
    return std::string(to_string(model)) + "-" + label(assessment, builtin_assessment_names()) + "-" +
           label(pts, builtin_pts_names());
}

MatrixSpec default_matrix(const SearchConfig& cfg, double r3_margin) {
    MatrixSpec spec;
    for (auto model : {ControllerKind::Pwm, ControllerKind::Buck}) {
        for (const auto& pts : builtin_pts_names()) {
            for (const char* a : {"r1", "r2", "r3"}) spec.experiments.push_back({model, a, pts, cfg, r3_margin, {}});
        }
    }
    return spec;
}

MatrixSpec parse_matrix_spec(std::string_view json_text) {
    using detail::get_field;
    constexpr std::string_view what = "matrix spec";
    const auto doc = detail::parse_json(json_text, what);
    if (!doc.is_object()) throw Error("matrix spec: document must be an object");

    SearchConfig cfg;
    double r3_margin = kDefaultR3Margin;
    if (doc.contains("config")) {
        const auto& c = doc.at("config");
        if (c.contains("runs")) cfg.runs = get_field<int>(c, "runs", what);
        if (c.contains("max_iterations")) cfg.max_iterations = get_field<int>(c, "max_iterations", what);
        if (c.contains("seed")) cfg.seed = get_field<std::uint64_t>(c, "seed", what);
        if (c.contains("threshold")) cfg.threshold = get_field<double>(c, "threshold", what);
        if (c.contains("r3_margin")) r3_margin = get_field<double>(c, "r3_margin", what);
    }
    check_config(cfg);

    std::optional<std::string> overrides[2];
    if (doc.contains("plant")) {
        for (const auto& [model, obj] : doc.at("plant").items()) {
            overrides[static_cast<int>(parse_controller_kind(model))] = obj.dump();
        }
    }

    auto list = [&](const char* key, std::vector<std::string> fallback) {
        if (!doc.contains(key)) return fallback;
        return get_field<std::vector<std::string>>(doc, key, what);
    };

    MatrixSpec spec;
    const bool cross = doc.contains("models") || doc.contains("assessments") || doc.contains("pts");
    if (cross) {
        for (const auto& m : list("models", {"pwm", "buck"})) {
            const auto model = parse_controller_kind(m);
            for (const auto& pts : list("pts", builtin_pts_names())) {
                for (const auto& a : list("assessments", {"r1", "r2", "r3"})) {
                    spec.experiments.push_back({model, a, pts, cfg, r3_margin, overrides[static_cast<int>(model)]});
                }
            }
        }
    }
    if (doc.contains("experiments")) {
        for (const auto& e : doc.at("experiments")) {
            const auto model = parse_controller_kind(get_field<std::string>(e, "model", what));
            spec.experiments.push_back({model, get_field<std::string>(e, "assessment", what),
                                        get_field<std::string>(e, "pts", what), cfg, r3_margin,
                                        overrides[static_cast<int>(model)]});
        }
    }
    if (spec.experiments.empty()) throw Error("matrix spec: no experiments");
    return spec;
}

MatrixSpec load_matrix_spec(const std::string& path) { return parse_matrix_spec(detail::read_file(path)); }

ParameterizedTestSequence resolve_pts(const std::string& name_or_path) {
    if (contains(builtin_pts_names(), name_or_path)) return builtin_pts(name_or_path);
    if (fs::is_regular_file(name_or_path)) return load_pts_file(name_or_path);
    throw Error("unknown test sequence '" + name_or_path + "' (not a built-in name or a file)");
}

Assessment resolve_assessment(const std::string& name_or_path, double r3_margin) {
    if (contains(builtin_assessment_names(), name_or_path)) return builtin_assessment(name_or_path, r3_margin);
    if (fs::is_regular_file(name_or_path)) return load_assessment_file(name_or_path);
    throw Error("unknown assessment '" + name_or_path + "' (not a built-in name or a file)");
}

PlantParams resolve_plant(ControllerKind model, const std::optional<std::string>& overrides) {
    auto p = default_params(model);
    if (overrides) p = apply_overrides(p, *overrides);
    return p;
}

Problem make_problem(const ExperimentSpec& spec) {
    return make_problem(resolve_pts(spec.pts), resolve_assessment(spec.assessment, spec.r3_margin), spec.model,
                        resolve_plant(spec.model, spec.plant_overrides), spec.cfg.threshold);
}

std::vector<ResultRow> result_rows(const std::vector<ExperimentResult>& results) {
    std::vector<ResultRow> rows;
    for (const auto& r : results) {
        const std::string model(to_string(r.spec.model));
        const auto a = label(r.spec.assessment, builtin_assessment_names());
        const auto pts = label(r.spec.pts, builtin_pts_names());
        for (const auto& run : r.campaign.runs) {
            rows.push_back({model, a, pts, run.run_index, run.seed, run.falsified, run.iterations_used,
                            run.best.fitness});
        }
    }
    return rows;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << r.model << ',' << r.assessment << ',' << r.pts << ',' << r.run << ',' << r.seed << ','
            << (r.falsified ? 1 : 0) << ',' << r.iterations << ',' << format_double(r.best_fitness) << '\n';
    }
}

std::vector<ResultRow> parse_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) throw Error("results csv: unexpected header");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 8) throw Error("results csv: line " + std::to_string(line_no) + " has wrong arity");
        try {
            ResultRow r;
            r.model = cells[0];
            r.assessment = cells[1];
            r.pts = cells[2];
            r.run = std::stoi(cells[3]);
            r.seed = std::stoull(cells[4]);
            if (cells[5] != "0" && cells[5] != "1") throw Error("bad falsified flag");
            r.falsified = cells[5] == "1";
            r.iterations = std::stoi(cells[6]);
            r.best_fitness = parse_double(cells[7]);
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw Error("results csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<ExperimentSummary> summarize(const std::vector<ResultRow>& rows) {
    std::vector<ExperimentSummary> out;
    std::vector<std::vector<RunResult>> runs;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ExperimentSummary& s) {
            return s.model == r.model && s.assessment == r.assessment && s.pts == r.pts;
        });
        if (it == out.end()) {
            out.push_back({r.model, r.assessment, r.pts, {}});
            runs.emplace_back();
            it = out.end() - 1;
        }
        RunResult run;
        run.run_index = r.run;
        run.seed = r.seed;
        run.falsified = r.falsified;
        run.iterations_used = r.iterations;
        run.best.fitness = r.best_fitness;
        runs[static_cast<std::size_t>(it - out.begin())].push_back(std::move(run));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].campaign = aggregate(std::move(runs[i]));
    return out;
}

std::string render_table(const std::vector<ExperimentSummary>& summaries) {
    std::vector<std::string> assessments;
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& s : summaries) {
        if (!contains(assessments, s.assessment)) assessments.push_back(s.assessment);
        if (std::find(rows.begin(), rows.end(), std::pair{s.model, s.pts}) == rows.end()) rows.emplace_back(s.model, s.pts);
    }

    std::size_t pts_width = 3;
    for (const auto& [m, p] : rows) pts_width = std::max(pts_width, p.size());
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    constexpr std::size_t kCell = 7;

    std::ostringstream out;
    out << pad("Model", 6) << pad("PTS", pts_width + 1);
    for (const auto& a : assessments) out << "| " << pad("TA_" + a, 3 * kCell);
    out << '\n';
    out << pad("", 6) << pad("", pts_width + 1);
    for (std::size_t i = 0; i < assessments.size(); ++i) out << "| " << pad("FR", kCell) << pad("mean", kCell) << pad("median", kCell);
    out << '\n';
    for (const auto& [model, pts] : rows) {
        out << pad(model, 6) << pad(pts, pts_width + 1);
        for (const auto& a : assessments) {
            auto it = std::find_if(summaries.begin(), summaries.end(), [&](const ExperimentSummary& s) {
                return s.model == model && s.pts == pts && s.assessment == a;
            });
            out << "| ";
            if (it == summaries.end()) {
                out << pad("", 3 * kCell);
                continue;
            }
            const auto& c = it->campaign;
            out << pad(std::to_string(c.fr_numerator) + "/" + std::to_string(c.fr_denominator), kCell);
            if (c.stats) {
                out << pad(one_decimal(c.stats->mean_iterations), kCell) << pad(one_decimal(c.stats->median_iterations), kCell);
            } else {
                out << pad("-", kCell) << pad("-", kCell);
            }
        }
        out << '\n';
    }
    // Trailing padding is noise in diffs.
    std::string text = out.str();
    std::string trimmed;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        line.erase(line.find_last_not_of(' ') + 1);
        trimmed += line + '\n';
    }
    return trimmed;
}

std::string run_record_json(const ExperimentSpec& spec, const RunResult& run) {
    auto record_json = [](const IterationRecord& r) {
        ordered_json valuation = ordered_json::object();
        for (const auto& [k, v] : r.valuation) valuation[k] = v;
        ordered_json j;
        j["index"] = r.index;
        j["valuation"] = valuation;
        j["fitness"] = number_or_inf(r.fitness);
        j["vacuous"] = r.vacuous;
        j["errored"] = r.errored;
        return j;
    };
    ordered_json j;
    j["experiment"] = spec.id();
    j["model"] = std::string(to_string(spec.model));
    j["assessment"] = spec.assessment;
    j["pts"] = spec.pts;
    j["threshold"] = spec.cfg.threshold;
    j["r3_margin"] = spec.r3_margin;
    j["max_iterations"] = spec.cfg.max_iterations;
    j["run"] = run.run_index;
    j["seed"] = run.seed;
    j["falsified"] = run.falsified;
    j["iterations_used"] = run.iterations_used;
    j["vacuous_count"] = run.vacuous_count;
    j["error_count"] = run.error_count;
    j["best"] = record_json(run.best);
    ordered_json records = ordered_json::array();
    for (const auto& r : run.records) records.push_back(record_json(r));
    j["records"] = records;
    return j.dump(2) + "\n";
}

namespace {

void write_run_records(const fs::path& dir, const ExperimentSpec& spec, const CampaignResult& c) {
    make_dir(dir);
    for (const auto& run : c.runs) {
        write_text(dir / ("run-" + std::to_string(run.run_index) + ".json"), run_record_json(spec, run));
    }
}

ordered_json timing_json(const ExperimentSpec& spec, const CampaignResult& c) {
    ordered_json j;
    j["experiment"] = spec.id();
    ordered_json runs = ordered_json::array();
    for (const auto& r : c.runs) {
        runs.push_back({{"run", r.run_index}, {"falsified", r.falsified}, {"wall_time_s", r.wall_time}});
    }
    j["runs"] = runs;
    if (c.stats) {
        j["falsifying_time_s"] = {{"mean", c.stats->mean_time},
                                  {"min", c.stats->min_time},
                                  {"max", c.stats->max_time},
                                  {"std", c.stats->std_time}};
    }
    return j;
}

}  // namespace

std::vector<ExperimentResult> run_matrix(const MatrixSpec& spec, const std::string& out_dir, int jobs,
                                         std::ostream& log) {
    if (spec.experiments.empty()) throw Error("matrix: no experiments");
    const fs::path out(out_dir);
    make_dir(out);

    // Resolve everything up front so name errors surface before any work.
    std::vector<Problem> problems;
    for (const auto& e : spec.experiments) problems.push_back(make_problem(e));

    const std::size_t n = spec.experiments.size();
    std::vector<ExperimentResult> results(n);
    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto& e = spec.experiments[i];
            auto c = campaign(problems[i], e.cfg, 1);
            write_run_records(out / e.id(), e, c);
            results[i] = {e, std::move(c)};
            std::lock_guard lock(log_mutex);
            const auto& r = results[i].campaign;
            log << "[" << ++done << "/" << n << "] " << e.id() << "  FR " << r.fr_numerator << "/"
                << r.fr_denominator << std::endl;
        }
    };

    const auto workers = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(n)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    worker();
                } catch (...) {
                    errors[w] = std::current_exception();
                    next = n;
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    const auto rows = result_rows(results);
    std::ostringstream csv;
    write_results_csv(csv, rows);
    write_text(out / "results.csv", csv.str());
    write_text(out / "table.txt", render_table(summarize(rows)));

    ordered_json meta;
    meta["generated_at"] = iso_timestamp();
    meta["note"] = "wall times measure the surrogate plant on this machine";
    ordered_json experiments = ordered_json::array();
    for (const auto& r : results) experiments.push_back(timing_json(r.spec, r.campaign));
    meta["experiments"] = experiments;
    write_text(out / "metadata.json", meta.dump(2) + "\n");
    return results;
}

Trace emit_trace(ControllerKind model, const ParameterizedTestSequence& pts, const Valuation& v,
                 const PlantParams& params, const std::string& path) {
    Trace trace = execute(pts, v, model, params);
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) make_dir(parent);
    trace.write_csv(path);
    return trace;
}

int run_single(const ExperimentSpec& spec, const std::string& out_dir, int jobs, std::ostream& log) {
    const auto pts = resolve_pts(spec.pts);
    const auto params = resolve_plant(spec.model, spec.plant_overrides);
    const Problem problem = make_problem(spec);
    const CampaignResult c = campaign(problem, spec.cfg, jobs);

    const fs::path dir = fs::path(out_dir) / spec.id();
    write_run_records(dir, spec, c);

    log << "experiment " << spec.id() << "\n";
    log << "FR " << c.fr_numerator << "/" << c.fr_denominator << "\n";
    if (c.stats) {
        log << "iterations mean " << one_decimal(c.stats->mean_iterations) << " median "
            << one_decimal(c.stats->median_iterations) << "\n";
    } else {
        log << "iterations mean - median -\n";
    }
    const RunResult* best = nullptr;
    for (const auto& r : c.runs) {
        if (!best || r.best.fitness < best->best.fitness) best = &r;
    }
    if (best) {
        log << "best fitness " << format_double(best->best.fitness) << " (run " << best->run_index << ", iteration "
            << best->best.index;
        for (const auto& [k, v] : best->best.valuation) log << ", " << k << "=" << format_double(v);
        log << ")\n";
    }
    for (const auto& r : c.runs) {
        if (!r.falsified) continue;
        const auto path = (dir / "falsifying-trace.csv").string();
        emit_trace(spec.model, pts, r.records.back().valuation, params, path);
        log << "falsifying trace (run " << r.run_index << "): " << path << "\n";
        break;
    }
    return c.fr_numerator > 0 ? kExitFalsified : kExitNotFalsified;
}

}  // namespace sbst
