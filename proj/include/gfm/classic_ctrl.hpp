#pragma once

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"

namespace gfm {

// ---- cascaded inner loop -------------------------------------------------

struct InnerLoopGains {
    double k_pc = 0.0;  // voltage loop P
    double k_ic = 0.0;  // voltage loop I
    double k_pl = 0.0;  // current loop P
    double lambda0 = 0.0;
    double lambda_l = 0.0;
};

// Critically damped voltage loop at lambda0 and a current loop at lambda_l.
// Requires lambda0 < 0 and lambda_l <= 10*lambda0.
InnerLoopGains inner_gains_from_poles(double lambda0, double lambda_l, const ConverterParams& p);

struct InnerLoopState {
    Vec2 int_ec;
};

struct InnerLoopMeas {
    Vec2 v_ab;
    Vec2 i_ab;
    Vec2 i_load;
    double v_dc = 0.0;
};

struct InnerLoopOutput {
    ModulationCommand m;
    InnerLoopState st;
    Vec2 i_ref;
};

constexpr double kEpsDiv = 1e-6;

// e_c = v_ref - v, i_ref = Kpc e_c + Kic int(e_c) + i_load, e_l = i_ref - i,
// m = (2/v_dc)(v + R i + Kpl e_l). With this sign the current obeys
// L di/dt = Kpl e_l, i.e. a pole at lambda_l.
Vec2 inner_loop_modulation(const InnerLoopGains& g, const ConverterParams& p, const Vec2& int_ec,
                           const Vec2& v_ref, const InnerLoopMeas& meas, Vec2* i_ref = nullptr);

InnerLoopOutput inner_loop_step(const InnerLoopGains& g, const ConverterParams& p,
                                const InnerLoopState& st, const Vec2& v_ref,
                                const InnerLoopMeas& meas, double dt);

// ---- droop and polar references -----------------------------------------

struct DroopParams {
    double omega0 = 2.0 * 3.14159265358979323846 * 50.0;
    double v0_hat = 165.0;
    double p0 = 1e4;
    double q0 = 2000.0;
    double n_f = 2e-3;  // (rad/s)/W
    double n_a = 2e-3;  // V/var
    void validate() const;
};

struct PolarRefState {
    double theta = 0.0;
    double v_hat = 0.0;
};

struct RefOutput {
    Vec2 v_ref;
    PolarRefState st;
    bool clamped = false;
};

double droop_frequency(const DroopParams& d, double p);
double droop_amplitude(const DroopParams& d, double q, bool* clamped = nullptr);

// theta advanced by the droop frequency, amplitude algebraic, output v_hat*(-sin, cos).
RefOutput droop_reference(const DroopParams& d, const PolarRefState& st, double p, double q, double dt);

struct PolarVocParams {
    DroopParams droop;
    double lambda_osc = 100.0;
    void validate() const;
};

// Amplitude follows a first-order lag toward the droop target; output
// sqrt(3/2) v_hat (-sin, cos).
RefOutput polar_voc_step(const PolarVocParams& d, const PolarRefState& st, double p, double q, double dt);
double polar_voc_amp_rate(const PolarVocParams& d, double v_hat, double q);

// ---- Van der Pol VOC -------------------------------------------------------

struct VdpVocParams {
    double mu_vdp = 0.2;
    double kappa = 0.8;
    double omega0 = 2.0 * 3.14159265358979323846 * 50.0;
    void validate() const;
};

struct VdpVocState {
    double x1a = 1.0, x2a = -1.0, x1b = 1.0, x2b = 1.0;
};

void vdp_deriv(const VdpVocParams& p, const VdpVocState& s, const Vec2& i_load, VdpVocState& ds);

// v_ref = v_ref_amp sqrt(3/2) (x1a, x1b) / |(x1a, x1b)|.
Vec2 vdp_output(const VdpVocState& s, double v_ref_amp);

struct VdpOutput {
    Vec2 v_ref;
    VdpVocState st;
};

// One RK4 step of both oscillators with the load current held.
VdpOutput vdp_voc_step(const VdpVocParams& p, const VdpVocState& st, const Vec2& i_load,
                       double v_ref_amp, double dt);

double vdp_amplitude_a(const VdpVocState& s);
double vdp_amplitude_b(const VdpVocState& s);
double vdp_phase_a(const VdpVocState& s);
double vdp_phase_b(const VdpVocState& s);

// ---- open-loop polar modulation -----------------------------------------

struct OpenLoopParams {
    double lambda_m = 100.0;
    double vm_ref = 0.33;
    double omega_ref = 2.0 * 3.14159265358979323846 * 50.0;
    // false: lag on the modulation amplitude itself (open loop).
    // true: integrate the error against the measured capacitor amplitude.
    bool capacitor_feedback = false;
    double v_dc_ref = 1000.0;
    void validate() const;
};

// m = v_m sqrt(3/2) (-sin theta_m, cos theta_m)
ModulationCommand open_loop_modulation(const PolarRefState& st);
double open_loop_amp_rate(const OpenLoopParams& p, double v_m, double cap_norm);

struct OpenLoopOutput {
    ModulationCommand m;
    PolarRefState st;
};

OpenLoopOutput open_loop_modulation_step(const OpenLoopParams& p, const PolarRefState& st, double dt,
                                         double cap_norm = 0.0);

}  // namespace gfm
