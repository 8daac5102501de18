#include "sbst/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <ostream>

#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

std::string_view to_string(Unit unit) {
    switch (unit) {
        case Unit::Rpm: return "rpm";
        case Unit::Seconds: return "seconds";
        case Unit::Dimensionless: return "dimensionless";
        case Unit::Fraction: return "fraction";
    }
    return "?";
}

TimeGrid::TimeGrid(double t0, double dt, std::size_t n) : t0_(t0), dt_(dt), n_(n) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("time grid: dt must be positive and finite");
    if (n == 0) throw Error("time grid: needs at least one sample");
    if (!std::isfinite(t0)) throw Error("time grid: t0 must be finite");
}

TimeGrid TimeGrid::covering(double horizon, double dt, double t0) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw Error("time grid: horizon must be finite and >= 0");
    if (!(dt > 0.0)) throw Error("time grid: dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    return TimeGrid(t0, dt, steps + 1);
}

Trace::Trace(TimeGrid grid) : grid_(grid) {}

Trace::Trace(TimeGrid grid, std::vector<Channel> channels) : grid_(grid) {
    channels_.reserve(channels.size());
    for (auto& c : channels) {
        check_channel(c);
        channels_.push_back(std::move(c));
    }
}

void Trace::check_channel(const Channel& channel) const {
    if (channel.name.empty()) throw Error("trace: channel name must not be empty");
    if (has_channel(channel.name)) throw Error("trace: duplicate channel '" + channel.name + "'");
    if (channel.values.size() != grid_.size()) {
        throw Error("trace: channel '" + channel.name + "' has " + std::to_string(channel.values.size()) +
                    " samples, grid has " + std::to_string(grid_.size()));
    }
    for (std::size_t k = 0; k < channel.values.size(); ++k) {
        if (!std::isfinite(channel.values[k])) {
            throw Error("trace: channel '" + channel.name + "' has a non-finite value at t=" +
                        format_double(grid_.time_at(k)));
        }
    }
}

bool Trace::has_channel(std::string_view name) const {
    return std::any_of(channels_.begin(), channels_.end(), [&](const Channel& c) { return c.name == name; });
}

const Channel& Trace::channel(std::string_view name) const {
    for (const auto& c : channels_) {
        if (c.name == name) return c;
    }
    throw Error("trace: unknown channel '" + std::string(name) + "'");
}

double Trace::value_at(std::string_view name, double t) const {
    const auto& c = channel(name);
    const double slack = kIndexSlack * grid_.dt();
    if (!(t >= grid_.t0() - slack && t <= grid_.end() + slack)) {
        throw Error("trace: time " + format_double(t) + " outside [" + format_double(grid_.t0()) + ", " +
                    format_double(grid_.end()) + "]");
    }
    const double pos = (t - grid_.t0()) / grid_.dt() + kIndexSlack;
    const auto k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(pos))), grid_.size() - 1);
    return c.values[k];
}

std::pair<double, double> Trace::window_extrema(std::string_view name, double from, double to) const {
    const auto& c = channel(name);
    if (!(from <= to)) throw Error("trace: window start after window end");
    const double lo_pos = std::ceil((from - grid_.t0()) / grid_.dt() - kIndexSlack);
    const double hi_pos = std::floor((to - grid_.t0()) / grid_.dt() + kIndexSlack);
    const double last = static_cast<double>(grid_.size() - 1);
    const double lo = std::max(0.0, lo_pos);
    const double hi = std::min(last, hi_pos);
    if (lo > hi) throw Error("trace: window does not intersect the grid");
    const auto first = c.values.begin() + static_cast<std::ptrdiff_t>(lo);
    const auto end = c.values.begin() + static_cast<std::ptrdiff_t>(hi) + 1;
    const auto [mn, mx] = std::minmax_element(first, end);
    return {*mn, *mx};
}

Trace Trace::with_channel(Channel channel) const {
    Trace copy = *this;
    copy.check_channel(channel);
    copy.channels_.push_back(std::move(channel));
    return copy;
}

void Trace::write_csv(std::ostream& out) const {
    out << "time";
    for (const auto& c : channels_) out << ',' << c.name;
    out << '\n';
    char buf[64];
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9f", grid_.time_at(k));
        out << buf;
        for (const auto& c : channels_) out << ',' << format_double(c.values[k]);
        out << '\n';
    }
}

void Trace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_csv(out);
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace sbst
