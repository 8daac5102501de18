#pragma once

// Surrogate e-Bike powertrain: a lumped wheel/rotor inertia with friction and
// drag, driven either by a PWM speed controller with separate motoring and
// regenerative-braking algorithms or by a Buck converter with cascaded speed
// and current loops.
//
// The dynamics are a stand-in for an unpublished simulation model. Constants
// are fixtures chosen so that each controller exhibits the failure mechanisms
// the benchmark is about, not measured motor data.

#include <string>
#include <string_view>

#include "sbst/signal.hpp"

namespace sbst {

enum class ControllerKind { Pwm, Buck };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller_kind(std::string_view text);

struct PlantParams {
    double J = 0.5;           // lumped inertia, kg m^2
    double Kt = 0.5;          // torque constant, N m / A
    double Imax = 30.0;       // current limit, A
    double c0 = 0.1;          // static friction, N m
    double c1 = 0.005;        // viscous friction, N m / rpm
    double c2 = 2.5e-5;       // aerodynamic drag, N m / rpm^2
    double kp_s = 0.1;        // speed loop proportional gain (duty or A per rpm)
    double ki_s = 0.05;       // speed loop integral gain (per rpm s)
    double kp_i = 0.0;        // current loop proportional gain (Buck)
    double ki_i = 0.0;        // current loop integral gain (Buck)
    double tau_i = 0.2;       // current lag time constant, s
    double dt = 1e-3;         // integration step, s
    double regen_gain = 4.0;  // braking current scale relative to Imax (PWM)
    double control_period = 0.2;       // controller update period, s
    double battery_energy = 1.8e6;     // usable battery energy, J
};

/// Throws sbst::Error naming the first violated constraint.
void check_params(const PlantParams& p);

/// Tuned defaults for each controller.
PlantParams default_params(ControllerKind kind);

/// Overrides fields of `base` from a JSON object keyed by field name.
PlantParams apply_overrides(PlantParams base, std::string_view json_text);

struct PlantState {
    double theta = 0.0;      // rotor angle, rad, kept in [0, 2 pi)
    double omega = 0.0;      // wheel speed, rpm
    double current = 0.0;    // motor current, A (negative while regenerating)
    double current_cmd = 0.0;
    double soc = 0.8;        // battery state of charge
    bool braking = false;    // PWM mode flag
    double duty = 0.0;       // PWM duty cycle
    double pi_speed = 0.0;   // speed loop integrator
    double pi_current = 0.0; // current loop integrator
    int control_countdown = 0;  // integration steps until the next controller update
};

inline constexpr double kInitialSoc = 0.8;

/// Active commutation sector, 0..5, of rotor angle theta.
int sector(double theta);

/// Advances the plant by one dt. The controller runs when the countdown
/// reaches zero; PWM picks motoring or braking on every update with no
/// hysteresis. Throws sbst::SimulationAbort on a non-finite state.
PlantState step(ControllerKind kind, const PlantState& s, double desired, const PlantParams& p);

/// Motor torque produced by the state's current, N m.
double motor_torque(const PlantState& s, const PlantParams& p);

/// Runs the plant from rest (soc 0.8) against the stimulus channel
/// `desired_speed`. The stimulus grid step must equal p.dt. Returns channels
/// desired_speed, measured_speed, sector, actuation (duty or current), soc.
Trace simulate(ControllerKind kind, const Trace& stimulus, const PlantParams& p);

}  // namespace sbst
