#include "gfm/classic_ctrl.hpp"

#include <cmath>

#include "gfm/errors.hpp"

namespace gfm {

namespace {
const double kSqrt32 = std::sqrt(1.5);
}

InnerLoopGains inner_gains_from_poles(double lambda0, double lambda_l, const ConverterParams& p) {
    if (!(lambda0 < 0.0)) throw ConfigError("lambda0 must be negative");
    if (!(lambda_l <= 10.0 * lambda0))
        throw ConfigError("current-loop pole must be at least ten times faster than lambda0");
    InnerLoopGains g;
    g.lambda0 = lambda0;
    g.lambda_l = lambda_l;
    g.k_pc = -2.0 * p.c * lambda0;
    g.k_ic = p.c * lambda0 * lambda0;
    g.k_pl = -p.l * lambda_l;
    return g;
}

Vec2 inner_loop_modulation(const InnerLoopGains& g, const ConverterParams& p, const Vec2& int_ec,
                           const Vec2& v_ref, const InnerLoopMeas& meas, Vec2* i_ref_out) {
    if (!(meas.v_dc > kEpsDiv)) throw ControllerError("inner loop undefined for v_dc <= eps");
    const Vec2 e_c = v_ref - meas.v_ab;
    const Vec2 i_ref = g.k_pc * e_c + g.k_ic * int_ec + meas.i_load;
    const Vec2 e_l = i_ref - meas.i_ab;
    if (i_ref_out) *i_ref_out = i_ref;
    return (meas.v_ab + p.r * meas.i_ab + g.k_pl * e_l) * (2.0 / meas.v_dc);
}

InnerLoopOutput inner_loop_step(const InnerLoopGains& g, const ConverterParams& p,
                                const InnerLoopState& st, const Vec2& v_ref,
                                const InnerLoopMeas& meas, double dt) {
    InnerLoopOutput out;
    out.m = clamp_modulation(inner_loop_modulation(g, p, st.int_ec, v_ref, meas, &out.i_ref));
    out.st = st;
    if (!out.m.saturated) out.st.int_ec += (v_ref - meas.v_ab) * dt;
    return out;
}

void DroopParams::validate() const {
    if (!(n_f > 0.0) || !(n_a > 0.0)) throw ConfigError("droop gains must be positive");
}

double droop_frequency(const DroopParams& d, double p) { return d.omega0 + d.n_f * (d.p0 - p); }

double droop_amplitude(const DroopParams& d, double q, bool* clamped) {
    double v = d.v0_hat + d.n_a * (d.q0 - q);
    const bool c = v < 0.0;
    if (clamped) *clamped = c;
    return c ? 0.0 : v;
}

RefOutput droop_reference(const DroopParams& d, const PolarRefState& st, double p, double q, double dt) {
    RefOutput out;
    out.st.theta = st.theta + droop_frequency(d, p) * dt;
    out.st.v_hat = droop_amplitude(d, q, &out.clamped);
    out.v_ref = out.st.v_hat * polar_unit(out.st.theta);
    return out;
}

void PolarVocParams::validate() const {
    droop.validate();
    if (!(lambda_osc > 0.0)) throw ConfigError("lambda_osc must be positive");
}

double polar_voc_amp_rate(const PolarVocParams& d, double v_hat, double q) {
    return d.lambda_osc * (d.droop.v0_hat + d.droop.n_a * (d.droop.q0 - q) - v_hat);
}

RefOutput polar_voc_step(const PolarVocParams& d, const PolarRefState& st, double p, double q, double dt) {
    RefOutput out;
    const double target = d.droop.v0_hat + d.droop.n_a * (d.droop.q0 - q);
    out.st.theta = st.theta + droop_frequency(d.droop, p) * dt;
    out.st.v_hat = target + (st.v_hat - target) * std::exp(-d.lambda_osc * dt);
    if (out.st.v_hat < 0.0) {
        out.st.v_hat = 0.0;
        out.clamped = true;
    }
    out.v_ref = kSqrt32 * out.st.v_hat * polar_unit(out.st.theta);
    return out;
}

void VdpVocParams::validate() const {
    if (!(mu_vdp >= 0.0)) throw ConfigError("Van der Pol mu must be >= 0");
    if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
}

void vdp_deriv(const VdpVocParams& p, const VdpVocState& s, const Vec2& i_load, VdpVocState& ds) {
    ds.x1a = p.omega0 * s.x2a;
    ds.x2a = -p.omega0 * s.x1a + p.mu_vdp * (1.0 - s.x1a * s.x1a) * s.x2a + p.kappa * i_load.a;
    ds.x1b = p.omega0 * s.x2b;
    ds.x2b = -p.omega0 * s.x1b + p.mu_vdp * (1.0 - s.x1b * s.x1b) * s.x2b + p.kappa * i_load.b;
}

Vec2 vdp_output(const VdpVocState& s, double v_ref_amp) {
    const double n = std::hypot(s.x1a, s.x1b);
    if (n < 1e-12) throw NumericError("Van der Pol oscillator degenerate: (x1a, x1b) at zero");
    return Vec2{s.x1a, s.x1b} * (v_ref_amp * kSqrt32 / n);
}

VdpOutput vdp_voc_step(const VdpVocParams& p, const VdpVocState& st, const Vec2& i_load,
                       double v_ref_amp, double dt) {
    auto axpy = [](const VdpVocState& x, const VdpVocState& k, double h) {
        return VdpVocState{x.x1a + h * k.x1a, x.x2a + h * k.x2a, x.x1b + h * k.x1b, x.x2b + h * k.x2b};
    };
    VdpVocState k1, k2, k3, k4;
    vdp_deriv(p, st, i_load, k1);
    vdp_deriv(p, axpy(st, k1, 0.5 * dt), i_load, k2);
    vdp_deriv(p, axpy(st, k2, 0.5 * dt), i_load, k3);
    vdp_deriv(p, axpy(st, k3, dt), i_load, k4);
    VdpOutput out;
    out.st.x1a = st.x1a + dt / 6.0 * (k1.x1a + 2.0 * k2.x1a + 2.0 * k3.x1a + k4.x1a);
    out.st.x2a = st.x2a + dt / 6.0 * (k1.x2a + 2.0 * k2.x2a + 2.0 * k3.x2a + k4.x2a);
    out.st.x1b = st.x1b + dt / 6.0 * (k1.x1b + 2.0 * k2.x1b + 2.0 * k3.x1b + k4.x1b);
    out.st.x2b = st.x2b + dt / 6.0 * (k1.x2b + 2.0 * k2.x2b + 2.0 * k3.x2b + k4.x2b);
    out.v_ref = vdp_output(out.st, v_ref_amp);
    return out;
}

double vdp_amplitude_a(const VdpVocState& s) { return std::hypot(s.x1a, s.x2a); }
double vdp_amplitude_b(const VdpVocState& s) { return std::hypot(s.x1b, s.x2b); }
// phase of x1 = A sin(omega t + phi)
double vdp_phase_a(const VdpVocState& s) { return std::atan2(s.x1a, s.x2a); }
double vdp_phase_b(const VdpVocState& s) { return std::atan2(s.x1b, s.x2b); }

void OpenLoopParams::validate() const {
    if (!(lambda_m > 0.0)) throw ConfigError("lambda_m must be positive");
    if (capacitor_feedback && !(v_dc_ref > 0.0)) throw ConfigError("v_dc_ref must be positive");
}

ModulationCommand open_loop_modulation(const PolarRefState& st) {
    return clamp_modulation(kSqrt32 * st.v_hat * polar_unit(st.theta));
}

double open_loop_amp_rate(const OpenLoopParams& p, double v_m, double cap_norm) {
    if (!p.capacitor_feedback) return p.lambda_m * (p.vm_ref - v_m);
    // capacitor norm expressed in modulation units
    const double v_meas = 2.0 * cap_norm / (kSqrt32 * p.v_dc_ref);
    return p.lambda_m * (p.vm_ref - v_meas);
}

OpenLoopOutput open_loop_modulation_step(const OpenLoopParams& p, const PolarRefState& st, double dt,
                                         double cap_norm) {
    OpenLoopOutput out;
    out.st.theta = st.theta + p.omega_ref * dt;
    if (p.capacitor_feedback)
        out.st.v_hat = st.v_hat + dt * open_loop_amp_rate(p, st.v_hat, cap_norm);
    else
        out.st.v_hat = p.vm_ref + (st.v_hat - p.vm_ref) * std::exp(-p.lambda_m * dt);
    out.m = open_loop_modulation(out.st);
    return out;
}

}  // namespace gfm
