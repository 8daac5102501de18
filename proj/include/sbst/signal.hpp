#pragma once

// Uniform-grid, multi-channel time series shared by every other module.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sbst {

enum class Unit { Rpm, Seconds, Dimensionless, Fraction };

std::string_view to_string(Unit unit);

/// Fixed-step sampling grid. Sample k sits at t0 + k * dt, computed directly
/// from k so long grids never accumulate drift.
class TimeGrid {
public:
    TimeGrid(double t0, double dt, std::size_t n);

    /// Grid covering [t0, t0 + horizon] with round(horizon / dt) + 1 samples.
    static TimeGrid covering(double horizon, double dt, double t0 = 0.0);

    double t0() const { return t0_; }
    double dt() const { return dt_; }
    std::size_t size() const { return n_; }
    double time_at(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
    double end() const { return time_at(n_ - 1); }
    double horizon() const { return end() - t0_; }

    bool operator==(const TimeGrid&) const = default;

private:
    double t0_;
    double dt_;
    std::size_t n_;
};

struct Channel {
    std::string name;
    Unit unit = Unit::Dimensionless;
    std::vector<double> values;
};

/// Immutable set of named channels over one grid.
class Trace {
public:
    explicit Trace(TimeGrid grid);
    Trace(TimeGrid grid, std::vector<Channel> channels);

    const TimeGrid& grid() const { return grid_; }
    const std::vector<Channel>& channels() const { return channels_; }

    bool has_channel(std::string_view name) const;
    const Channel& channel(std::string_view name) const;
    std::span<const double> values(std::string_view name) const { return channel(name).values; }

    /// Zero-order hold: the sample at the last grid index at or before t.
    double value_at(std::string_view name, double t) const;

    /// (min, max) over the samples whose time lies in [from, to].
    std::pair<double, double> window_extrema(std::string_view name, double from, double to) const;

    /// Copy of this trace with one more channel. The receiver is unchanged.
    Trace with_channel(Channel channel) const;

    /// CSV with header `time,<channel>,...` and one row per grid sample.
    void write_csv(std::ostream& out) const;
    void write_csv(const std::string& path) const;

private:
    void check_channel(const Channel& channel) const;

    TimeGrid grid_;
    std::vector<Channel> channels_;
};

/// Slack, in units of one grid step, used when mapping times onto indices.
inline constexpr double kIndexSlack = 1e-6;

}  // namespace sbst
