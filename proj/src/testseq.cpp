#include "sbst/testseq.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json_util.hpp"
#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

namespace {

std::vector<std::string> step_names(const std::vector<SeqStep>& steps) {
    std::vector<std::string> names;
    names.reserve(steps.size());
    for (const auto& s : steps) names.push_back(s.name);
    return names;
}

// Checks shared by parameterized and concrete sequences. `params` is the set
// of names an expression may reference.
void check_body(const std::vector<OutputDecl>& outputs, const std::vector<SeqStep>& steps,
                const std::vector<StepTransition>& transitions, const std::string& initial, double offset,
                const std::set<std::string, std::less<>>& params, std::vector<std::string>& diags) {
    if (outputs.empty()) diags.push_back("no outputs declared");
    std::set<std::string, std::less<>> declared;
    for (const auto& o : outputs) {
        if (o.name.empty()) diags.push_back("output with empty name");
        if (!declared.insert(o.name).second) diags.push_back("duplicate output '" + o.name + "'");
        if (params.contains(o.name)) diags.push_back("output '" + o.name + "' shadows a parameter");
    }

    for (const auto& step : steps) {
        for (const auto& o : declared) {
            if (!step.assignments.contains(o)) {
                diags.push_back("step '" + step.name + "' does not assign output '" + o + "'");
            }
        }
        for (const auto& [out, expr] : step.assignments) {
            if (!declared.contains(out)) {
                diags.push_back("step '" + step.name + "' assigns undeclared output '" + out + "'");
            }
            for (const auto& ref : expr.references()) {
                if (!params.contains(ref)) {
                    diags.push_back("step '" + step.name + "': unknown parameter '" + ref + "'");
                }
            }
            if (expr.has_constant_zero_divisor()) {
                diags.push_back("step '" + step.name + "': division by constant zero in '" + expr.to_string() + "'");
            }
        }
    }

    const auto names = step_names(steps);
    for (auto& d : check_step_graph(names, transitions, initial)) diags.push_back(std::move(d));

    if (!(offset >= 0.0) || !std::isfinite(offset)) {
        diags.push_back("offset must be finite and >= 0, got " + format_double(offset));
    }
}

}  // namespace

std::vector<std::string> validate(const ParameterizedTestSequence& pts) {
    std::vector<std::string> diags;
    std::set<std::string, std::less<>> params;
    for (const auto& p : pts.params) {
        if (p.name.empty()) diags.push_back("parameter with empty name");
        if (!params.insert(p.name).second) diags.push_back("duplicate parameter '" + p.name + "'");
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper)) {
            diags.push_back("parameter '" + p.name + "' has non-finite bounds");
        } else if (p.lower > p.upper) {
            diags.push_back("parameter '" + p.name + "' has lower bound " + format_double(p.lower) +
                            " above upper bound " + format_double(p.upper));
        }
    }
    check_body(pts.outputs, pts.steps, pts.transitions, pts.initial, pts.offset, params, diags);
    return diags;
}

void check_valuation(const ParameterizedTestSequence& pts, const Valuation& v) {
    for (const auto& p : pts.params) {
        auto it = v.find(p.name);
        if (it == v.end()) throw Error("valuation: missing value for parameter '" + p.name + "'");
        const double x = it->second;
        if (!std::isfinite(x) || x < p.lower || x > p.upper) {
            throw Error("valuation: " + p.name + "=" + format_double(x) + " outside [" + format_double(p.lower) +
                        ", " + format_double(p.upper) + "]");
        }
    }
    for (const auto& [name, value] : v) {
        const bool known = std::any_of(pts.params.begin(), pts.params.end(),
                                       [&](const ParamSpec& p) { return p.name == name; });
        if (!known) throw Error("valuation: unknown parameter '" + name + "'");
    }
}

TestSequence instantiate(const ParameterizedTestSequence& pts, const Valuation& v) {
    if (const auto diags = validate(pts); !diags.empty()) {
        throw Error("test sequence '" + pts.name + "' is invalid: " + diags.front());
    }
    check_valuation(pts, v);

    TestSequence ts;
    ts.name = pts.name;
    ts.outputs = pts.outputs;
    ts.transitions = pts.transitions;
    ts.initial = pts.initial;
    ts.offset = pts.offset;
    ts.valuation = v;
    ts.steps.reserve(pts.steps.size());
    for (const auto& step : pts.steps) {
        SeqStep bound{step.name, {}};
        for (const auto& [out, expr] : step.assignments) bound.assignments.emplace(out, expr.substitute(v));
        ts.steps.push_back(std::move(bound));
    }
    return ts;
}

Trace generate_signal(const TestSequence& ts, const TimeGrid& grid) {
    std::vector<std::string> diags;
    check_body(ts.outputs, ts.steps, ts.transitions, ts.initial, ts.offset, {}, diags);
    if (!diags.empty()) throw Error("test sequence '" + ts.name + "' is invalid: " + diags.front());
    if (grid.size() < 2) throw Error("generate_signal: grid horizon must be positive");

    const auto names = step_names(ts.steps);
    const StepSchedule schedule(names, ts.transitions, ts.initial);

    auto no_refs = [](std::string_view) -> std::optional<std::size_t> { return std::nullopt; };
    // program[step][output]
    std::vector<std::vector<BoundExpr>> program(ts.steps.size());
    for (std::size_t s = 0; s < ts.steps.size(); ++s) {
        for (const auto& out : ts.outputs) program[s].emplace_back(ts.steps[s].assignments.at(out.name), no_refs);
    }

    std::vector<std::vector<double>> values(ts.outputs.size(), std::vector<double>(grid.size()));
    StepSchedule::Walker walker(schedule, grid.t0());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time_at(k);
        const std::size_t s = walker.advance_to(t);
        const double step_time = t - walker.entry_time();
        for (std::size_t o = 0; o < ts.outputs.size(); ++o) {
            double v = 0.0;
            try {
                v = program[s][o].evaluate({}, t, step_time);
            } catch (const EvalError& e) {
                throw EvalError("test sequence '" + ts.name + "', step '" + ts.steps[s].name +
                                "', t=" + format_double(t) + ": " + e.what());
            }
            values[o][k] = v + ts.offset;
        }
    }

    std::vector<Channel> channels;
    for (std::size_t o = 0; o < ts.outputs.size(); ++o) {
        channels.push_back({ts.outputs[o].name, ts.outputs[o].unit, std::move(values[o])});
    }
    return Trace(grid, std::move(channels));
}

namespace {

constexpr double kSegment = 5.0;

// Linear segment between two endpoint expressions over kSegment seconds.
Expr segment(const std::string& from, const std::string& to) {
    if (from == to) return Expr::parse(from);
    const std::string slope = from == "0" ? to : "(" + to + " - " + from + ")";
    const std::string rise = slope + " / 5 * step_time()";
    return Expr::parse(from == "0" ? rise : from + " + " + rise);
}

ParameterizedTestSequence set_point_skeleton(std::string name, double offset) {
    ParameterizedTestSequence pts;
    pts.name = std::move(name);
    pts.outputs = {{"desired_speed", Unit::Rpm}};
    pts.params = {{std::string(kSetPointParam), kSetPointLower, kSetPointUpper}};
    pts.offset = offset;
    pts.initial = "step_1";
    return pts;
}

// Seven 5 s segments through base, sp, sp, base, base, sp, sp, base.
ParameterizedTestSequence t_pyramid(std::string name, double offset) {
    auto pts = set_point_skeleton(std::move(name), offset);
    const std::string sp(kSetPointParam);
    const std::vector<std::string> knots = {"0", sp, sp, "0", "0", sp, sp, "0"};
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const std::string step = "step_" + std::to_string(i + 1);
        pts.steps.push_back({step, {{"desired_speed", segment(knots[i], knots[i + 1])}}});
        if (i + 2 < knots.size()) pts.transitions.push_back({step, kSegment, "step_" + std::to_string(i + 2)});
    }
    return pts;
}

// 1 s at base, 4 s at sp, repeated.
ParameterizedTestSequence rect_pulse(std::string name, double offset) {
    auto pts = set_point_skeleton(std::move(name), offset);
    pts.steps.push_back({"step_1", {{"desired_speed", Expr::constant(0.0)}}});
    pts.steps.push_back({"step_2", {{"desired_speed", Expr::reference(std::string(kSetPointParam))}}});
    pts.transitions.push_back({"step_1", 1.0, "step_2"});
    pts.transitions.push_back({"step_2", 4.0, "step_1"});
    return pts;
}

constexpr double kOffsets[] = {0.0, 85.0, 130.0};

}  // namespace

std::vector<std::string> builtin_pts_names() {
    std::vector<std::string> names;
    for (const char* family : {"t-pyramid", "rect-pulse"}) {
        for (double k : kOffsets) names.push_back(std::string(family) + "-" + std::to_string(static_cast<int>(k)));
    }
    return names;
}

ParameterizedTestSequence builtin_pts(std::string_view name) {
    for (const char* family : {"t-pyramid", "rect-pulse"}) {
        for (double k : kOffsets) {
            const std::string full = std::string(family) + "-" + std::to_string(static_cast<int>(k));
            if (full != name) continue;
            return std::string_view(family) == "t-pyramid" ? t_pyramid(full, k) : rect_pulse(full, k);
        }
    }
    throw Error("unknown test sequence '" + std::string(name) + "'");
}

ParameterizedTestSequence parse_pts(std::string_view json_text) {
    using detail::get_field;
    constexpr std::string_view what = "test sequence";
    const auto doc = detail::parse_json(json_text, what);
    if (!doc.is_object()) throw Error("test sequence: document must be an object");

    ParameterizedTestSequence pts;
    pts.name = doc.value("name", std::string("user"));
    for (const auto& o : get_field<detail::json>(doc, "outputs", what)) {
        if (o.is_string()) {
            pts.outputs.push_back({o.get<std::string>(), Unit::Rpm});
            continue;
        }
        OutputDecl decl{get_field<std::string>(o, "name", what), Unit::Rpm};
        const auto unit = o.value("unit", std::string("rpm"));
        if (unit == "rpm") decl.unit = Unit::Rpm;
        else if (unit == "seconds") decl.unit = Unit::Seconds;
        else if (unit == "dimensionless") decl.unit = Unit::Dimensionless;
        else if (unit == "fraction") decl.unit = Unit::Fraction;
        else throw Error("test sequence: unknown unit '" + unit + "'");
        pts.outputs.push_back(std::move(decl));
    }
    if (doc.contains("params")) {
        for (const auto& p : doc.at("params")) {
            pts.params.push_back({get_field<std::string>(p, "name", what), get_field<double>(p, "lower", what),
                                  get_field<double>(p, "upper", what)});
        }
    }
    for (const auto& s : get_field<detail::json>(doc, "steps", what)) {
        SeqStep step{get_field<std::string>(s, "name", what), {}};
        const auto assignments = get_field<detail::json>(s, "assignments", what);
        if (!assignments.is_object()) throw Error("test sequence: 'assignments' must be an object");
        for (const auto& [out, text] : assignments.items()) {
            if (!text.is_string() && !text.is_number()) {
                throw Error("test sequence: assignment to '" + out + "' must be an expression string");
            }
            step.assignments.emplace(out, text.is_number() ? Expr::constant(text.get<double>())
                                                           : Expr::parse(text.get<std::string>()));
        }
        pts.steps.push_back(std::move(step));
    }
    pts.transitions = detail::parse_transitions(doc, what);
    pts.initial = get_field<std::string>(doc, "initial", what);
    pts.offset = doc.contains("offset") ? get_field<double>(doc, "offset", what) : 0.0;
    return pts;
}

ParameterizedTestSequence load_pts_file(const std::string& path) { return parse_pts(detail::read_file(path)); }

}  // namespace sbst
