#pragma once

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"

namespace gfm {

// Unit oscillator xi = (-sin theta_v, cos theta_v).
struct MatchingState {
    Vec2 xi{0.0, 1.0};

    static MatchingState from_theta(double theta) { return {polar_unit(theta)}; }
    double theta() const;
};

struct MatchingOutput {
    ModulationCommand m;
    MatchingState st;
};

// m = mu * xi / |xi|; the norm equals mu exactly up to rounding.
Vec2 matching_modulation(double mu, const Vec2& xi);

// Rotates xi by eta*v_dc*dt and renormalises.
MatchingOutput matching_step(const ConverterParams& p, const MatchingState& st, double v_dc, double dt);

// Machine quantities induced by the matching law:
//   inertia C_dc/eta^2, damping G_dc/eta^2, mechanical torque i_dc/eta,
//   electrical torque i_x/eta, rotor speed eta*v_dc.
// In machine terms mu corresponds to -2 eta L_m i_f (mutual inductance times
// regulated field current); the machine itself is never simulated.
struct EquivalentMachine {
    double inertia_eq = 0.0;
    double damping_eq = 0.0;
    double torque_m_eq = 0.0;
    double tau_e_v = 0.0;
    double omega_v = 0.0;
};

EquivalentMachine equivalent_machine(const ConverterParams& p, double v_dc, double i_x);

constexpr double kEpsAmp = 1e-9;

// Closed-loop dynamics of v_x = mu v_dc xi / 2 written in v_x alone:
// (4C_dc/mu^2) dv_x/dt = (2 i_dc/mu) v_x/|v_x| - Y i
//                        + (-(4G_dc/mu^2) I + (8 C_dc eta/mu^3)|v_x| J2) v_x,
// with Y the projection onto v_x.
Vec2 vx_terminal_deriv(const ConverterParams& p, const Vec2& v_x, const Vec2& i_ab);

}  // namespace gfm
