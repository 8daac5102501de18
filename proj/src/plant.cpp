#include "sbst/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json_util.hpp"
#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRpmToRadPerSec = kTwoPi / 60.0;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

int control_steps(const PlantParams& p) {
    return std::max(1, static_cast<int>(std::llround(p.control_period / p.dt)));
}

double lag_factor(const PlantParams& p) { return p.tau_i > 0.0 ? -std::expm1(-p.dt / p.tau_i) : 1.0; }

// Clamped PI with integrator freeze while saturated.
double pi_update(double input, double kp, double ki, double& integrator, double lo, double hi, double period) {
    const double u = kp * input + ki * integrator;
    const double out = std::clamp(u, lo, hi);
    if (out == u) integrator += input * period;
    return out;
}

void run_controller(ControllerKind kind, PlantState& s, double desired, const PlantParams& p) {
    const double period = static_cast<double>(control_steps(p)) * p.dt;
    const double error = desired - s.omega;
    if (kind == ControllerKind::Pwm) {
        // Both algorithms drive the same speed-loop integrator.
        s.braking = s.omega > desired;
        const double input = s.braking ? -error : error;
        s.duty = pi_update(input, p.kp_s, p.ki_s, s.pi_speed, 0.0, 1.0, period);
        s.current_cmd = s.braking ? -p.regen_gain * p.Imax * s.duty : p.Imax * s.duty;
        return;
    }
    s.braking = false;
    const double i_ref = pi_update(error, p.kp_s, p.ki_s, s.pi_speed, 0.0, p.Imax, period);
    s.current_cmd = pi_update(i_ref - s.current, p.kp_i, p.ki_i, s.pi_current, 0.0, p.Imax, period);
}

PlantState advance(ControllerKind kind, const PlantState& s, double desired, const PlantParams& p, double lag) {
    PlantState n = s;
    if (n.control_countdown <= 0) {
        run_controller(kind, n, desired, p);
        n.control_countdown = control_steps(p);
    }
    --n.control_countdown;

    n.current += lag * (n.current_cmd - n.current);
    const double torque = p.Kt * n.current;

    const double w = s.omega;
    double net = 0.0;
    if (w == 0.0) {
        net = std::abs(torque) <= p.c0 ? 0.0 : torque - sign(torque) * p.c0;
    } else {
        net = torque - sign(w) * (p.c0 + p.c1 * std::abs(w) + p.c2 * w * w);
    }
    double w_next = w + p.dt * net / p.J / kRpmToRadPerSec;
    // Friction stops the wheel; it never reverses it.
    if (w > 0.0 && w_next < 0.0 && torque > -p.c0) w_next = 0.0;
    if (w < 0.0 && w_next > 0.0 && torque < p.c0) w_next = 0.0;
    n.omega = w_next;

    n.theta = std::fmod(n.theta + p.dt * w_next * kRpmToRadPerSec, kTwoPi);
    if (n.theta < 0.0) n.theta += kTwoPi;

    // Positive power drains the battery, regenerated power charges it.
    n.soc = std::clamp(n.soc - p.dt * torque * w * kRpmToRadPerSec / p.battery_energy, 0.0, 1.0);

    for (double v : {n.theta, n.omega, n.current, n.current_cmd, n.soc, n.duty, n.pi_speed, n.pi_current}) {
        if (!std::isfinite(v)) throw SimulationAbort("plant produced a non-finite state (desired=" + format_double(desired) + ")");
    }
    return n;
}

}  // namespace

std::string_view to_string(ControllerKind kind) { return kind == ControllerKind::Pwm ? "pwm" : "buck"; }

ControllerKind parse_controller_kind(std::string_view text) {
    if (text == "pwm" || text == "PWM") return ControllerKind::Pwm;
    if (text == "buck" || text == "Buck") return ControllerKind::Buck;
    throw Error("unknown model '" + std::string(text) + "' (expected pwm or buck)");
}

void check_params(const PlantParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string("plant parameter ") + name + " must be > 0");
    };
    auto non_negative = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(std::string("plant parameter ") + name + " must be >= 0");
    };
    positive(p.J, "J");
    positive(p.Kt, "Kt");
    positive(p.Imax, "Imax");
    positive(p.dt, "dt");
    positive(p.control_period, "control_period");
    positive(p.battery_energy, "battery_energy");
    non_negative(p.c0, "c0");
    non_negative(p.c1, "c1");
    non_negative(p.c2, "c2");
    non_negative(p.kp_s, "kp_s");
    non_negative(p.ki_s, "ki_s");
    non_negative(p.kp_i, "kp_i");
    non_negative(p.ki_i, "ki_i");
    non_negative(p.tau_i, "tau_i");
    non_negative(p.regen_gain, "regen_gain");
}

PlantParams default_params(ControllerKind kind) {
    PlantParams p;  // shared mechanics
    if (kind == ControllerKind::Pwm) {
        // Slow regulation loop, sluggish torque response and braking authority
        // four times the motoring authority: switching between the motoring and
        // braking algorithms settles into a large limit cycle.
        p.kp_s = 0.1;
        p.ki_s = 0.05;
        p.tau_i = 0.2;
        p.regen_gain = 4.0;
        p.control_period = 0.2;
        return p;
    }
    // Underdamped speed loop (large overshoot on steps) and a current command
    // clamped at zero, so the converter can only coast down.
    p.kp_s = 0.1;
    p.ki_s = 0.2;
    p.kp_i = 2.0;
    p.ki_i = 50.0;
    p.tau_i = 0.02;
    p.regen_gain = 0.0;
    p.control_period = p.dt;
    return p;
}

PlantParams apply_overrides(PlantParams base, std::string_view json_text) {
    const auto doc = detail::parse_json(json_text, "plant overrides");
    if (!doc.is_object()) throw Error("plant overrides: document must be an object");
    const std::pair<const char*, double PlantParams::*> fields[] = {
        {"J", &PlantParams::J},
        {"Kt", &PlantParams::Kt},
        {"Imax", &PlantParams::Imax},
        {"c0", &PlantParams::c0},
        {"c1", &PlantParams::c1},
        {"c2", &PlantParams::c2},
        {"kp_s", &PlantParams::kp_s},
        {"ki_s", &PlantParams::ki_s},
        {"kp_i", &PlantParams::kp_i},
        {"ki_i", &PlantParams::ki_i},
        {"tau_i", &PlantParams::tau_i},
        {"dt", &PlantParams::dt},
        {"regen_gain", &PlantParams::regen_gain},
        {"control_period", &PlantParams::control_period},
        {"battery_energy", &PlantParams::battery_energy},
    };
    for (const auto& [key, value] : doc.items()) {
        auto it = std::find_if(std::begin(fields), std::end(fields), [&](const auto& f) { return key == f.first; });
        if (it == std::end(fields)) throw Error("plant overrides: unknown parameter '" + key + "'");
        if (!value.is_number()) throw Error("plant overrides: '" + key + "' must be a number");
        base.*(it->second) = value.get<double>();
    }
    check_params(base);
    return base;
}

int sector(double theta) {
    const double wrapped = std::fmod(std::fmod(theta, kTwoPi) + kTwoPi, kTwoPi);
    const int s = static_cast<int>(std::floor(wrapped / (std::numbers::pi / 3.0)));
    return std::clamp(s, 0, 5);
}

double motor_torque(const PlantState& s, const PlantParams& p) { return p.Kt * s.current; }

PlantState step(ControllerKind kind, const PlantState& s, double desired, const PlantParams& p) {
    return advance(kind, s, desired, p, lag_factor(p));
}

Trace simulate(ControllerKind kind, const Trace& stimulus, const PlantParams& p) {
    check_params(p);
    const auto& grid = stimulus.grid();
    if (std::abs(grid.dt() - p.dt) > 1e-12 * p.dt) {
        throw Error("simulate: stimulus step " + format_double(grid.dt()) + " differs from plant dt " +
                    format_double(p.dt));
    }
    const auto desired = stimulus.values("desired_speed");
    const std::size_t n = grid.size();
    std::vector<double> measured(n), sectors(n), actuation(n), soc(n);

    const double lag = lag_factor(p);
    PlantState s;
    s.soc = kInitialSoc;
    for (std::size_t k = 0; k < n; ++k) {
        measured[k] = s.omega;
        sectors[k] = sector(s.theta);
        actuation[k] = kind == ControllerKind::Pwm ? s.duty : s.current;
        soc[k] = s.soc;
        if (k + 1 < n) s = advance(kind, s, desired[k], p, lag);
    }

    std::vector<Channel> channels;
    channels.push_back({"desired_speed", Unit::Rpm, {desired.begin(), desired.end()}});
    channels.push_back({"measured_speed", Unit::Rpm, std::move(measured)});
    channels.push_back({"sector", Unit::Dimensionless, std::move(sectors)});
    channels.push_back({"actuation", kind == ControllerKind::Pwm ? Unit::Fraction : Unit::Dimensionless,
                        std::move(actuation)});
    channels.push_back({"soc", Unit::Fraction, std::move(soc)});
    return Trace(grid, std::move(channels));
}

}  // namespace sbst
