#pragma once

// Step/transition skeleton shared by test sequences and assessments: named
// steps, at most one time-guarded (`after`) transition out of each step.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sbst {

struct StepTransition {
    std::string from;
    double after = 0.0;  // seconds spent in `from` before moving on
    std::string next;
};

/// Structural diagnostics: duplicate/missing names, non-positive durations,
/// multiple outgoing transitions, steps unreachable from `initial`.
std::vector<std::string> check_step_graph(std::span<const std::string> steps,
                                          std::span<const StepTransition> transitions,
                                          const std::string& initial);

/// Index-based form of a valid step graph.
class StepSchedule {
public:
    /// Throws sbst::Error listing the diagnostics if the graph is invalid.
    StepSchedule(std::span<const std::string> steps, std::span<const StepTransition> transitions,
                 const std::string& initial);

    std::size_t initial() const { return initial_; }
    std::size_t size() const { return next_.size(); }
    std::optional<std::size_t> next(std::size_t step) const { return next_[step]; }
    double after(std::size_t step) const { return after_[step]; }

    /// Walks the schedule forward in time. A transition fires once the time
    /// spent in the step reaches `after`; the new step's entry time is the old
    /// entry plus exactly `after`, so cycles never drift. A step without a
    /// transition is held forever.
    class Walker {
    public:
        Walker(const StepSchedule& schedule, double t0)
            : schedule_(&schedule), step_(schedule.initial()), entry_(t0) {}

        /// Advances to time t (non-decreasing across calls); returns the active step.
        std::size_t advance_to(double t);
        std::size_t step() const { return step_; }
        double entry_time() const { return entry_; }

    private:
        const StepSchedule* schedule_;
        std::size_t step_;
        double entry_;
    };

private:
    std::size_t initial_ = 0;
    std::vector<std::optional<std::size_t>> next_;
    std::vector<double> after_;
};

/// Tolerance, in seconds, when comparing time in step against `after`.
inline constexpr double kTransitionSlack = 1e-9;

}  // namespace sbst
