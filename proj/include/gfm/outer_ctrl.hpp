#pragma once

#include <string>
#include <utility>

#include "gfm/plant.hpp"

namespace gfm {

// ---- amplitude tracking through mu ---------------------------------------

struct AmpTrackParams {
    double k_p = 0.15;
    double k_i = 11.25;
    double k_x = 2e5;
    double lambda_x = 1e5;
    double lambda0 = -100.0;
    // current mode tracks il_ref; voltage mode derives il_ref from v_ref
    bool voltage_mode = false;
    double il_ref = 20.0;
    double v_ref = 0.0;
    double k_cp = 0.0;
    double k_ci = 0.0;
    void validate() const;
};

struct AmpTrackState {
    double int_el = 0.0;
    double int_ec = 0.0;
    double mu_dyn = 0.33;
    bool flag = false;
};

struct AmpTrackMeas {
    double il_amp = 0.0;     // |i_ab|
    double v_amp = 0.0;      // |v_ab|
    double vload_amp = 0.0;  // |i_load|
    double v_dc = 0.0;
    double v_dc_dot = 0.0;
};

struct AmpTrackRates {
    double d_int_el = 0.0;
    double d_int_ec = 0.0;
    double d_mu = 0.0;
    double il_ref = 0.0;
    double vx_ref = 0.0;
    bool undefined = false;
};

// e_l = |i| - il_ref, vx_ref = -Kp e_l - Ki int(e_l) + |v|,
// e_x = mu v_dc/2 - vx_ref, dmu/dt = -Kx e_x / v_dc.
// Integrators freeze while mu sits on a bound and is pushed outward.
AmpTrackRates amp_track_rates(const AmpTrackParams& p, const AmpTrackState& st, const AmpTrackMeas& m);

std::pair<double, AmpTrackState> amp_track_step(const AmpTrackParams& p, const AmpTrackState& st,
                                                const AmpTrackMeas& m, double dt);

// ---- DC current PID --------------------------------------------------------

struct IdcPidParams {
    double k_p = 0.3;
    double k_i = 20.0;
    double k_d = 0.001;
    double n_filter = 10.0;
    void validate() const;
};

// The filtered derivative K_d N s/(s+N) is realised as z = K_d N (e - w)
// with dw/dt = N (e - w).
struct IdcPidState {
    double int_e = 0.0;
    double w = 0.0;
};

double idc_pid_output(const IdcPidParams& p, const IdcPidState& st, double e);

struct IdcPidOutput {
    double i_dc_cmd = 0.0;  // correction added to the caller's bias
    IdcPidState st;
};

IdcPidOutput idc_pid_step(const IdcPidParams& p, const IdcPidState& st, double v_dc_ref, double v_dc,
                          double dt);

// Inertia seen by the frequency once the D-part acts on the DC capacitor.
double pid_equivalent_inertia(const ConverterParams& cp, const IdcPidParams& p);

// ---- frequency tracking through eta ---------------------------------------

enum class EtaLaw { kTracking, kVsm };

struct EtaTrackParams {
    double tau = 100.0;
    double omega_ref = 2.0 * 3.14159265358979323846 * 50.0;
    double j_extra = 0.0;
    EtaLaw law = EtaLaw::kTracking;
    void validate() const;
};

struct EtaTrackState {
    double eta_dyn = 0.3142;
    bool flag = false;
};

// kTracking: deta/dt = (tau/v)(w_ref - eta v) - (eta/v) dv/dt, giving
//            dw/dt = tau (w_ref - w) in continuous time.
// kVsm:      deta/dt = -(tau/v)(w - w_ref) + eta G_dc/C_dc - (J/v) dw/dt,
//            solved for deta/dt.
double eta_rate(const EtaTrackParams& p, const ConverterParams& cp, double eta, double v_dc,
                double v_dc_dot, bool* undefined = nullptr);

std::pair<double, EtaTrackState> eta_track_step(const EtaTrackParams& p, const ConverterParams& cp,
                                                const EtaTrackState& st, double v_dc, double v_dc_dot,
                                                double dt);

// Inertia C_dc (1 + J) / eta^2 of the VSM variant.
double eta_vsm_inertia(const ConverterParams& cp, const EtaTrackParams& p, double eta);

// ---- reactive power shaping ------------------------------------------------

enum class ReactiveMode { kMu, kEta, kIdc };

struct ReactiveShapeParams {
    ReactiveMode mode = ReactiveMode::kMu;
    double base = 0.33;
    double gain = 1e-5;
    double q_filter = 100.0;   // rad/s, low-pass on the measured Q_x
    void validate() const;
};

struct ShapedValue {
    double value = 0.0;
    bool clamped = false;
};

ShapedValue reactive_shape(const ReactiveShapeParams& p, double q_x);
std::pair<double, double> reactive_limits(const ReactiveShapeParams& p);

ReactiveMode parse_reactive_mode(const std::string& s);

}  // namespace gfm
