#include "sbst/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json_util.hpp"
#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

std::string_view to_string(CmpOp op) {
    switch (op) {
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
    }
    return "?";
}

bool is_strict(CmpOp op) { return op == CmpOp::Lt || op == CmpOp::Gt; }

Predicate Predicate::parse(std::string_view text) {
    int depth = 0;
    std::optional<std::size_t> at;
    std::size_t width = 0;
    CmpOp op = CmpOp::Le;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth != 0 || (c != '<' && c != '>')) continue;
        if (at) throw Error("predicate '" + std::string(text) + "': more than one comparison");
        at = i;
        const bool eq = i + 1 < text.size() && text[i + 1] == '=';
        width = eq ? 2 : 1;
        op = c == '<' ? (eq ? CmpOp::Le : CmpOp::Lt) : (eq ? CmpOp::Ge : CmpOp::Gt);
        i += width - 1;
    }
    if (!at) throw Error("predicate '" + std::string(text) + "': expected one of <=, >=, <, >");
    return {Expr::parse(text.substr(0, *at)), op, Expr::parse(text.substr(*at + width))};
}

std::string Predicate::to_string() const {
    return lhs.to_string() + " " + std::string(sbst::to_string(op)) + " " + rhs.to_string();
}

std::vector<std::string> validate(const Assessment& a) {
    std::vector<std::string> diags;
    std::vector<std::string> names;
    for (const auto& step : a.steps) {
        names.push_back(step.name);
        for (const auto& p : step.verifies) {
            if (p.lhs.uses_time() || p.rhs.uses_time()) {
                diags.push_back("step '" + step.name + "': predicate '" + p.to_string() +
                                "' may only reference channels and constants");
            }
            if (p.lhs.has_constant_zero_divisor() || p.rhs.has_constant_zero_divisor()) {
                diags.push_back("step '" + step.name + "': division by constant zero in '" + p.to_string() + "'");
            }
        }
    }
    for (auto& d : check_step_graph(names, a.transitions, a.initial)) diags.push_back(std::move(d));
    return diags;
}

namespace {

// Assessment compiled against one trace: predicates bound to channel slots.
struct Compiled {
    struct BoundPredicate {
        BoundExpr lhs;
        CmpOp op;
        BoundExpr rhs;
    };

    std::vector<const Channel*> slots;
    std::vector<std::vector<BoundPredicate>> steps;
    StepSchedule schedule;

    static Compiled build(const Assessment& a, const Trace& trace) {
        if (const auto diags = validate(a); !diags.empty()) {
            throw Error("assessment '" + a.name + "' is invalid: " + diags.front());
        }
        if (trace.channels().empty()) throw Error("assessment '" + a.name + "': empty trace");

        std::vector<std::string> names;
        for (const auto& s : a.steps) names.push_back(s.name);
        Compiled c{{}, {}, StepSchedule(names, a.transitions, a.initial)};

        std::vector<std::string> slot_names;
        auto slot_of = [&](std::string_view name) -> std::optional<std::size_t> {
            auto it = std::find(slot_names.begin(), slot_names.end(), name);
            if (it != slot_names.end()) return static_cast<std::size_t>(it - slot_names.begin());
            if (!trace.has_channel(name)) {
                throw Error("assessment '" + a.name + "': trace has no channel '" + std::string(name) + "'");
            }
            slot_names.emplace_back(name);
            c.slots.push_back(&trace.channel(name));
            return slot_names.size() - 1;
        };
        for (const auto& s : a.steps) {
            auto& bound = c.steps.emplace_back();
            for (const auto& p : s.verifies) bound.push_back({BoundExpr(p.lhs, slot_of), p.op, BoundExpr(p.rhs, slot_of)});
        }
        return c;
    }
};

template <typename Visit>
void walk_active(const Assessment& a, const Trace& trace, Visit&& visit) {
    const Compiled c = Compiled::build(a, trace);
    const auto& grid = trace.grid();
    std::vector<double> sample(c.slots.size());
    StepSchedule::Walker walker(c.schedule, grid.t0());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time_at(k);
        const std::size_t s = walker.advance_to(t);
        const auto& preds = c.steps[s];
        if (preds.empty()) continue;
        for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = c.slots[i]->values[k];
        for (const auto& p : preds) {
            double lhs = 0.0;
            double rhs = 0.0;
            try {
                lhs = p.lhs.evaluate(sample, t, 0.0);
                rhs = p.rhs.evaluate(sample, t, 0.0);
            } catch (const EvalError& e) {
                throw EvalError("assessment '" + a.name + "', step '" + a.steps[s].name + "', t=" +
                                format_double(t) + ": " + e.what());
            }
            visit(t, p.op, lhs, rhs);
        }
    }
}

}  // namespace

Verdict evaluate(const Assessment& a, const Trace& trace, double threshold) {
    if (!std::isfinite(threshold)) throw Error("evaluate: threshold must be finite");
    Verdict v;
    walk_active(a, trace, [&](double t, CmpOp op, double lhs, double rhs) {
        const double rob = (op == CmpOp::Le || op == CmpOp::Lt) ? rhs - lhs : lhs - rhs;
        v.vacuous = false;
        v.fitness = std::min(v.fitness, rob);
        if (rob < threshold && !v.first_violation) v.first_violation = t;
    });
    v.passed = v.fitness >= threshold;
    return v;
}

OracleVerdict evaluate_boolean_oracle(const Assessment& a, const Trace& trace) {
    OracleVerdict v;
    walk_active(a, trace, [&](double, CmpOp op, double lhs, double rhs) {
        v.vacuous = false;
        bool ok = false;
        switch (op) {
            case CmpOp::Le: ok = lhs <= rhs; break;
            case CmpOp::Ge: ok = lhs >= rhs; break;
            case CmpOp::Lt: ok = lhs < rhs; break;
            case CmpOp::Gt: ok = lhs > rhs; break;
        }
        v.holds = v.holds && ok;
    });
    return v;
}

namespace {

Assessment always(std::string name, const std::string& predicate) {
    return {std::move(name), {{"always", {Predicate::parse(predicate)}}}, {}, "always"};
}

}  // namespace

std::vector<std::string> builtin_assessment_names() { return {"r1", "r2", "r3", "fig3b"}; }

Assessment builtin_assessment(std::string_view name, double r3_margin) {
    if (name == "r1") return always("r1", "measured_speed >= 0");
    if (name == "r2") return always("r2", "measured_speed <= 170");
    if (name == "r3") {
        if (!std::isfinite(r3_margin)) throw Error("r3 margin must be finite");
        Assessment a = always("r3", "measured_speed <= desired_speed");
        a.steps[0].verifies[0].rhs = Expr::binary(BinaryOp::Add, Expr::reference("desired_speed"),
                                                  Expr::constant(r3_margin));
        return a;
    }
    if (name == "fig3b") {
        const auto bound = Predicate::parse("measured_speed <= 11");
        Assessment a;
        a.name = "fig3b";
        a.steps = {{"step_1", {}}, {"Speed_Hecate_1", {bound}}, {"step_3", {}}, {"Speed_Hecate_2", {bound}}};
        a.transitions = {{"step_1", 6.0, "Speed_Hecate_1"},
                         {"Speed_Hecate_1", 4.0, "step_3"},
                         {"step_3", 16.0, "Speed_Hecate_2"},
                         {"Speed_Hecate_2", 4.0, "step_1"}};
        a.initial = "step_1";
        return a;
    }
    throw Error("unknown assessment '" + std::string(name) + "'");
}

Assessment parse_assessment(std::string_view json_text) {
    using detail::get_field;
    constexpr std::string_view what = "assessment";
    const auto doc = detail::parse_json(json_text, what);
    if (!doc.is_object()) throw Error("assessment: document must be an object");

    Assessment a;
    a.name = doc.value("name", std::string("user"));
    for (const auto& s : get_field<detail::json>(doc, "steps", what)) {
        AssessStep step{get_field<std::string>(s, "name", what), {}};
        if (s.contains("verifies")) {
            for (const auto& p : s.at("verifies")) {
                if (!p.is_string()) throw Error("assessment: verifies must be predicate strings");
                step.verifies.push_back(Predicate::parse(p.get<std::string>()));
            }
        }
        a.steps.push_back(std::move(step));
    }
    a.transitions = detail::parse_transitions(doc, what);
    a.initial = get_field<std::string>(doc, "initial", what);
    return a;
}

Assessment load_assessment_file(const std::string& path) { return parse_assessment(detail::read_file(path)); }

}  // namespace sbst
