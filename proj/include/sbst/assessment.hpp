#pragma once

// Test assessments: step machines whose steps carry `verify` predicates over
// trace channels. Evaluated as a quantitative robustness (the search fitness)
// and, for testing, as a plain per-sample boolean check.

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbst/expr.hpp"
#include "sbst/signal.hpp"
#include "sbst/step_machine.hpp"

namespace sbst {

enum class CmpOp { Le, Ge, Lt, Gt };

std::string_view to_string(CmpOp op);
bool is_strict(CmpOp op);

/// `lhs op rhs`, both sides channel expressions.
struct Predicate {
    Expr lhs;
    CmpOp op;
    Expr rhs;

    /// Parses e.g. `measured_speed <= desired_speed + 1`.
    static Predicate parse(std::string_view text);
    std::string to_string() const;
};

struct AssessStep {
    std::string name;
    std::vector<Predicate> verifies;
};

struct Assessment {
    std::string name;
    std::vector<AssessStep> steps;
    std::vector<StepTransition> transitions;
    std::string initial;
};

struct Verdict {
    bool passed = true;
    /// Minimum robustness over every (sample, active verify) pair; +inf when
    /// no verify was ever active.
    double fitness = std::numeric_limits<double>::infinity();
    std::optional<double> first_violation;
    bool vacuous = true;
};

/// Structural diagnostics (the channel references are checked at evaluation).
std::vector<std::string> validate(const Assessment& a);

/// Robustness: rob(l <= r) = r - l, rob(l >= r) = l - r; strict operators use
/// the same formulas. passed = fitness >= threshold.
Verdict evaluate(const Assessment& a, const Trace& trace, double threshold = 0.0);

struct OracleVerdict {
    bool holds = true;
    bool vacuous = true;
};

/// Direct per-sample comparison of each active predicate, no robustness.
/// Independent cross-check of `evaluate`; not used by the search.
OracleVerdict evaluate_boolean_oracle(const Assessment& a, const Trace& trace);

inline constexpr double kDefaultR3Margin = 1.0;

/// r1: measured_speed >= 0; r2: measured_speed <= 170;
/// r3: measured_speed <= desired_speed + margin (all always active);
/// fig3b: four-step cycle verifying measured_speed <= 11 in two windows.
Assessment builtin_assessment(std::string_view name, double r3_margin = kDefaultR3Margin);
std::vector<std::string> builtin_assessment_names();

/// Same document shape as test sequences, with a `verifies` list of predicate
/// strings per step.
Assessment parse_assessment(std::string_view json_text);
Assessment load_assessment_file(const std::string& path);

}  // namespace sbst
