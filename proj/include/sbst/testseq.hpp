#pragma once

// Parameterized test sequences: step/transition machines whose steps assign
// expression values to output signals, with named, bounded search parameters.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sbst/expr.hpp"
#include "sbst/signal.hpp"
#include "sbst/step_machine.hpp"

namespace sbst {

struct ParamSpec {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
};

/// Parameter name -> value.
using Valuation = std::map<std::string, double, std::less<>>;

struct OutputDecl {
    std::string name;
    Unit unit = Unit::Rpm;
};

struct SeqStep {
    std::string name;
    std::map<std::string, Expr, std::less<>> assignments;  // output name -> value
};

struct ParameterizedTestSequence {
    std::string name;
    std::vector<OutputDecl> outputs;
    std::vector<ParamSpec> params;
    std::vector<SeqStep> steps;
    std::vector<StepTransition> transitions;
    std::string initial;
    double offset = 0.0;  // added to every output sample
};

/// A parameterized sequence with every parameter bound to a value.
struct TestSequence {
    std::string name;
    std::vector<OutputDecl> outputs;
    std::vector<SeqStep> steps;
    std::vector<StepTransition> transitions;
    std::string initial;
    double offset = 0.0;
    Valuation valuation;
};

/// Empty iff the sequence is well formed and every step is reachable.
std::vector<std::string> validate(const ParameterizedTestSequence& pts);

/// Throws sbst::Error if `v` misses a parameter, names an unknown one, or is
/// outside its bounds.
void check_valuation(const ParameterizedTestSequence& pts, const Valuation& v);

TestSequence instantiate(const ParameterizedTestSequence& pts, const Valuation& v);

/// Runs the step machine over `grid` and returns one channel per output.
/// Throws sbst::EvalError if an expression divides by zero at some sample.
Trace generate_signal(const TestSequence& ts, const TimeGrid& grid);

/// One of t-pyramid-{0,85,130} or rect-pulse-{0,85,130}.
ParameterizedTestSequence builtin_pts(std::string_view name);
std::vector<std::string> builtin_pts_names();

/// Name of the single search parameter of the built-in sequences.
inline constexpr std::string_view kSetPointParam = "Hecate_sp";
inline constexpr double kSetPointLower = 0.0;
inline constexpr double kSetPointUpper = 170.0;

/// Duration, in seconds, of the benchmark stimulus.
inline constexpr double kBenchmarkHorizon = 35.0;

/// JSON document with keys outputs, params, steps, transitions, initial, offset.
ParameterizedTestSequence parse_pts(std::string_view json_text);
ParameterizedTestSequence load_pts_file(const std::string& path);

}  // namespace sbst
