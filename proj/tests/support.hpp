#pragma once

#include <string>
#include <vector>

#include "sbst/signal.hpp"
#include "sbst/testseq.hpp"

namespace sbst::test {

inline Trace speed_trace(std::vector<double> measured, double dt = 0.1) {
    TimeGrid grid(0.0, dt, measured.size());
    return Trace(grid, {{"measured_speed", Unit::Rpm, std::move(measured)}});
}

inline Trace constant_speed(double value, double horizon = 35.0, double dt = 0.1) {
    const auto grid = TimeGrid::covering(horizon, dt);
    return speed_trace(std::vector<double>(grid.size(), value), dt);
}

inline Trace desired(const std::string& pts, double sp, double dt = 1e-3, double horizon = kBenchmarkHorizon) {
    const auto ts = instantiate(builtin_pts(pts), {{std::string(kSetPointParam), sp}});
    return generate_signal(ts, TimeGrid::covering(horizon, dt));
}

}  // namespace sbst::test
