#include "sbst/step_machine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

std::vector<std::string> check_step_graph(std::span<const std::string> steps,
                                          std::span<const StepTransition> transitions,
                                          const std::string& initial) {
    std::vector<std::string> diags;
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].empty()) diags.push_back("step " + std::to_string(i) + " has an empty name");
        if (!index.emplace(steps[i], i).second) diags.push_back("duplicate step name '" + steps[i] + "'");
    }
    if (steps.empty()) diags.push_back("no steps defined");

    if (!index.contains(initial)) diags.push_back("initial step '" + initial + "' does not exist");

    std::map<std::string, std::string, std::less<>> next_of;
    for (const auto& tr : transitions) {
        const bool from_ok = index.contains(tr.from);
        if (!from_ok) diags.push_back("transition from unknown step '" + tr.from + "'");
        if (!index.contains(tr.next)) {
            diags.push_back("transition from '" + tr.from + "' targets unknown step '" + tr.next + "'");
        }
        if (!(tr.after > 0.0) || !std::isfinite(tr.after)) {
            diags.push_back("transition from '" + tr.from + "' has non-positive duration " + format_double(tr.after));
        }
        if (from_ok && !next_of.emplace(tr.from, tr.next).second) {
            diags.push_back("step '" + tr.from + "' has more than one outgoing transition");
        }
    }

    if (auto it = index.find(initial); it != index.end()) {
        std::vector<bool> seen(steps.size(), false);
        std::string cur = initial;
        for (;;) {
            auto ci = index.find(cur);
            if (ci == index.end() || seen[ci->second]) break;
            seen[ci->second] = true;
            auto ni = next_of.find(cur);
            if (ni == next_of.end()) break;
            cur = ni->second;
        }
        for (std::size_t i = 0; i < steps.size(); ++i) {
            // Duplicates are already reported; only flag the first occurrence.
            if (!seen[i] && index.at(steps[i]) == i) {
                diags.push_back("step '" + steps[i] + "' is unreachable from '" + initial + "'");
            }
        }
    }
    return diags;
}

StepSchedule::StepSchedule(std::span<const std::string> steps, std::span<const StepTransition> transitions,
                           const std::string& initial) {
    const auto diags = check_step_graph(steps, transitions, initial);
    if (!diags.empty()) {
        std::string msg = "invalid step graph:";
        for (const auto& d : diags) msg += "\n  " + d;
        throw Error(msg);
    }
    auto index_of = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(steps.begin(), steps.end(), name) - steps.begin());
    };
    initial_ = index_of(initial);
    next_.assign(steps.size(), std::nullopt);
    after_.assign(steps.size(), 0.0);
    for (const auto& tr : transitions) {
        const auto from = index_of(tr.from);
        next_[from] = index_of(tr.next);
        after_[from] = tr.after;
    }
}

std::size_t StepSchedule::Walker::advance_to(double t) {
    for (;;) {
        const auto nxt = schedule_->next(step_);
        if (!nxt) break;
        const double after = schedule_->after(step_);
        if (t - entry_ < after - kTransitionSlack) break;
        entry_ += after;
        step_ = *nxt;
    }
    return step_;
}

}  // namespace sbst
