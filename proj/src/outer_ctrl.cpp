#include "gfm/outer_ctrl.hpp"

#include <algorithm>
#include <cmath>

#include "gfm/classic_ctrl.hpp"
#include "gfm/errors.hpp"

namespace gfm {

void AmpTrackParams::validate() const {
    if (!(k_x > 0.0)) throw ConfigError("K_x must be positive");
    if (!(lambda0 < 0.0)) throw ConfigError("lambda0 must be negative");
    if (std::abs(lambda_x) < 10.0 * std::abs(lambda0))
        throw ConfigError("amplitude loop must be at least ten times faster than the outer loop");
    if (!voltage_mode && !(il_ref >= 0.0)) throw ConfigError("il_ref must be >= 0");
}

AmpTrackRates amp_track_rates(const AmpTrackParams& p, const AmpTrackState& st, const AmpTrackMeas& m) {
    AmpTrackRates r;
    if (!(m.v_dc > kEpsDiv)) {
        r.undefined = true;
        return r;
    }
    double e_c = 0.0;
    r.il_ref = p.il_ref;
    if (p.voltage_mode) {
        e_c = m.v_amp - p.v_ref;
        r.il_ref = m.vload_amp - p.k_cp * e_c - p.k_ci * st.int_ec;
    }
    const double e_l = m.il_amp - r.il_ref;
    r.vx_ref = -p.k_p * e_l - p.k_i * st.int_el + m.v_amp;
    const double e_x = 0.5 * st.mu_dyn * m.v_dc - r.vx_ref;
    r.d_mu = -p.k_x * e_x / m.v_dc;
    const bool pinned = (st.mu_dyn >= 1.0 && r.d_mu > 0.0) || (st.mu_dyn <= 0.0 && r.d_mu < 0.0);
    if (pinned) {
        r.d_mu = 0.0;
        return r;
    }
    r.d_int_el = e_l;
    r.d_int_ec = p.voltage_mode ? e_c : 0.0;
    return r;
}

std::pair<double, AmpTrackState> amp_track_step(const AmpTrackParams& p, const AmpTrackState& st,
                                                const AmpTrackMeas& m, double dt) {
    const AmpTrackRates r = amp_track_rates(p, st, m);
    AmpTrackState n = st;
    n.flag = r.undefined;
    n.int_el += dt * r.d_int_el;
    n.int_ec += dt * r.d_int_ec;
    n.mu_dyn = std::clamp(st.mu_dyn + dt * r.d_mu, 0.0, 1.0);
    return {n.mu_dyn, n};
}

void IdcPidParams::validate() const {
    if (!(n_filter > 0.0)) throw ConfigError("PID filter cutoff N must be positive");
}

double idc_pid_output(const IdcPidParams& p, const IdcPidState& st, double e) {
    return p.k_p * e + p.k_i * st.int_e + p.k_d * p.n_filter * (e - st.w);
}

IdcPidOutput idc_pid_step(const IdcPidParams& p, const IdcPidState& st, double v_dc_ref, double v_dc,
                          double dt) {
    const double e = v_dc_ref - v_dc;
    IdcPidOutput out;
    out.i_dc_cmd = idc_pid_output(p, st, e);
    out.st.int_e = st.int_e + dt * e;
    out.st.w = e + (st.w - e) * std::exp(-p.n_filter * dt);
    return out;
}

double pid_equivalent_inertia(const ConverterParams& cp, const IdcPidParams& p) {
    return (cp.c_dc + p.k_d) / (cp.eta * cp.eta);
}

void EtaTrackParams::validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(j_extra >= 0.0)) throw ConfigError("J must be >= 0");
}

double eta_rate(const EtaTrackParams& p, const ConverterParams& cp, double eta, double v_dc,
                double v_dc_dot, bool* undefined) {
    if (!(v_dc > kEpsDiv)) {
        if (undefined) *undefined = true;
        return 0.0;
    }
    if (undefined) *undefined = false;
    const double w = eta * v_dc;
    if (p.law == EtaLaw::kTracking)
        return (p.tau / v_dc) * (p.omega_ref - w) - (eta / v_dc) * v_dc_dot;
    const double a = -(p.tau / v_dc) * (w - p.omega_ref) + eta * cp.g_dc / cp.c_dc;
    return (a - p.j_extra * eta * v_dc_dot / v_dc) / (1.0 + p.j_extra);
}

std::pair<double, EtaTrackState> eta_track_step(const EtaTrackParams& p, const ConverterParams& cp,
                                                const EtaTrackState& st, double v_dc, double v_dc_dot,
                                                double dt) {
    bool undef = false;
    const double rate = eta_rate(p, cp, st.eta_dyn, v_dc, v_dc_dot, &undef);
    EtaTrackState n = st;
    n.flag = undef;
    if (!undef) n.eta_dyn = std::max(st.eta_dyn + dt * rate, 0.0);
    return {n.eta_dyn, n};
}

double eta_vsm_inertia(const ConverterParams& cp, const EtaTrackParams& p, double eta) {
    return cp.c_dc * (1.0 + p.j_extra) / (eta * eta);
}

void ReactiveShapeParams::validate() const {
    if (!(gain > 0.0)) throw ConfigError("reactive shaping gain must be positive");
    if (!(q_filter > 0.0)) throw ConfigError("Q filter bandwidth must be positive");
    if (mode == ReactiveMode::kMu && !(base > 0.0 && base <= 1.0))
        throw ConfigError("mu0 must lie in (0, 1]");
}

ShapedValue reactive_shape(const ReactiveShapeParams& p, double q_x) {
    const double v = p.base + p.gain * q_x;
    const double hi = p.mode == ReactiveMode::kMu ? 1.0 : INFINITY;
    const double c = std::clamp(v, 0.0, hi);
    return {c, c != v};
}

std::pair<double, double> reactive_limits(const ReactiveShapeParams& p) {
    if (p.mode == ReactiveMode::kEta) throw ConfigError("no reactive power limit is defined for eta shaping");
    const double q = p.base / p.gain;
    return {-q, q};
}

ReactiveMode parse_reactive_mode(const std::string& s) {
    if (s == "mu") return ReactiveMode::kMu;
    if (s == "eta") return ReactiveMode::kEta;
    if (s == "idc") return ReactiveMode::kIdc;
    throw ConfigError("unknown reactive shaping mode '" + s + "'");
}

}  // namespace gfm
