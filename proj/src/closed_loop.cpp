#include "gfm/closed_loop.hpp"

#include <algorithm>
#include <cmath>

#include "gfm/errors.hpp"

namespace gfm {

namespace {

const double kSqrt32 = std::sqrt(1.5);

double cross(const Vec2& x, const Vec2& y) { return x.a * y.b - x.b * y.a; }

}  // namespace

// ---- inner loop ------------------------------------------------------------

InnerLoopController::InnerLoopController(const ConverterParams& p, const InnerLoopConfig& cfg)
    : p_(p), cfg_(cfg) {
    if (!(cfg.gains.k_pc > 0.0 && cfg.gains.k_ic > 0.0 && cfg.gains.k_pl > 0.0))
        throw ConfigError("inner loop gains must be positive");
    switch (cfg.source) {
        case RefSource::kDroop: cfg.droop.validate(); break;
        case RefSource::kPolarVoc: cfg.polar.validate(); break;
        case RefSource::kVdpVoc: cfg.vdp.validate(); break;
        case RefSource::kSinusoid: break;
    }
}

std::string InnerLoopController::name() const {
    switch (cfg_.source) {
        case RefSource::kDroop: return "droop";
        case RefSource::kPolarVoc: return "polar_voc";
        case RefSource::kVdpVoc: return "vdp_voc";
        default: return "inner_loop";
    }
}

std::size_t InnerLoopController::size() const {
    switch (cfg_.source) {
        case RefSource::kPolarVoc: return 4;
        case RefSource::kVdpVoc: return 6;
        default: return 3;
    }
}

void InnerLoopController::init(const PlantState&, double* xc) const {
    xc[0] = xc[1] = 0.0;
    switch (cfg_.source) {
        case RefSource::kPolarVoc:
            xc[2] = cfg_.theta0;
            xc[3] = cfg_.v_hat0;
            break;
        case RefSource::kVdpVoc:
            xc[2] = cfg_.vdp_init.x1a;
            xc[3] = cfg_.vdp_init.x2a;
            xc[4] = cfg_.vdp_init.x1b;
            xc[5] = cfg_.vdp_init.x2b;
            break;
        default: xc[2] = cfg_.theta0;
    }
}

Vec2 InnerLoopController::reference(const Measurements& m, const double* xc) const {
    switch (cfg_.source) {
        case RefSource::kSinusoid: return kSqrt32 * cfg_.amp * polar_unit(xc[2]);
        case RefSource::kDroop: {
            const PowerPQ pq = instantaneous_pq(m.s.v_ab, m.i_load);
            return droop_amplitude(cfg_.droop, pq.q) * polar_unit(xc[2]);
        }
        case RefSource::kPolarVoc: return kSqrt32 * std::max(xc[3], 0.0) * polar_unit(xc[2]);
        case RefSource::kVdpVoc: return vdp_output({xc[2], xc[3], xc[4], xc[5]}, cfg_.amp);
    }
    return {};
}

Actuation InnerLoopController::actuate(const Measurements& m, const double* xc) const {
    Actuation a;
    a.i_dc = p_.i_dc;
    if (!(m.s.v_dc > kEpsDiv)) {
        a.undefined = true;
        return a;
    }
    const InnerLoopMeas im{m.s.v_ab, m.s.i_ab, m.i_load, m.s.v_dc};
    const ModulationCommand c =
        clamp_modulation(inner_loop_modulation(cfg_.gains, p_, {xc[0], xc[1]}, reference(m, xc), im));
    a.m = c.m;
    a.saturated = c.saturated;
    a.mu = norm(c.m);
    if (cfg_.source != RefSource::kVdpVoc) a.theta = xc[2];
    return a;
}

void InnerLoopController::deriv(const Measurements& m, const double* xc, const Actuation& a,
                                const PlantState&, double* dxc) const {
    const Vec2 e_c = reference(m, xc) - m.s.v_ab;
    const bool hold = a.saturated || a.undefined;
    dxc[0] = hold ? 0.0 : e_c.a;
    dxc[1] = hold ? 0.0 : e_c.b;
    const PowerPQ pq = instantaneous_pq(m.s.v_ab, m.i_load);
    switch (cfg_.source) {
        case RefSource::kSinusoid: dxc[2] = cfg_.omega; break;
        case RefSource::kDroop: dxc[2] = droop_frequency(cfg_.droop, pq.p); break;
        case RefSource::kPolarVoc:
            dxc[2] = droop_frequency(cfg_.polar.droop, pq.p);
            dxc[3] = polar_voc_amp_rate(cfg_.polar, xc[3], pq.q);
            break;
        case RefSource::kVdpVoc: {
            VdpVocState ds;
            vdp_deriv(cfg_.vdp, {xc[2], xc[3], xc[4], xc[5]}, m.i_load, ds);
            dxc[2] = ds.x1a;
            dxc[3] = ds.x2a;
            dxc[4] = ds.x1b;
            dxc[5] = ds.x2b;
            break;
        }
    }
}

// ---- open loop -------------------------------------------------------------

OpenLoopController::OpenLoopController(const ConverterParams& p, const OpenLoopParams& cfg, double vm0,
                                       double theta0)
    : p_(p), cfg_(cfg), vm0_(vm0), theta0_(theta0) {
    cfg.validate();
}

void OpenLoopController::init(const PlantState&, double* xc) const {
    xc[0] = theta0_;
    xc[1] = vm0_;
}

Actuation OpenLoopController::actuate(const Measurements&, const double* xc) const {
    Actuation a;
    const ModulationCommand c = open_loop_modulation({xc[0], xc[1]});
    a.m = c.m;
    a.saturated = c.saturated;
    a.i_dc = p_.i_dc;
    a.mu = norm(c.m);
    a.theta = xc[0];
    return a;
}

void OpenLoopController::deriv(const Measurements& m, const double* xc, const Actuation&,
                               const PlantState&, double* dxc) const {
    dxc[0] = cfg_.omega_ref;
    dxc[1] = open_loop_amp_rate(cfg_, xc[1], norm(m.s.v_ab));
}

// ---- matching ---------------------------------------------------------------

void MatchingConfig::validate() const {
    if (mu_source == MuSource::kAmpTrack) {
        amp.validate();
        if (!(mu0 >= 0.0 && mu0 <= 1.0)) throw ConfigError("initial mu must lie in [0, 1]");
    }
    if (eta_source == EtaSource::kTrack) {
        eta_track.validate();
        if (!(eta0 > 0.0)) throw ConfigError("initial eta must be positive");
    }
    if (idc_source == IdcSource::kPid) {
        pid.validate();
        if (!(v_dc_ref > 0.0)) throw ConfigError("v_dc_ref must be positive");
    }
    const int n_reactive = (mu_source == MuSource::kReactive) + (eta_source == EtaSource::kReactive) +
                           (idc_source == IdcSource::kReactive);
    if (n_reactive > 1) throw ConfigError("only one quantity can be shaped by reactive power");
    if (n_reactive == 1) {
        reactive.validate();
        const ReactiveMode want = mu_source == MuSource::kReactive     ? ReactiveMode::kMu
                                  : eta_source == EtaSource::kReactive ? ReactiveMode::kEta
                                                                       : ReactiveMode::kIdc;
        if (reactive.mode != want) throw ConfigError("reactive shaping mode does not match its source");
    }
}

MatchingController::MatchingController(const ConverterParams& p, const MatchingConfig& cfg)
    : p_(p), cfg_(cfg) {
    cfg_.validate();
    int n = 2;
    if (cfg_.mu_source == MuSource::kAmpTrack) {
        i_mu_ = n++;
        i_el_ = n++;
        i_ec_ = n++;
    }
    if (cfg_.mu_source == MuSource::kReactive || cfg_.eta_source == EtaSource::kReactive ||
        cfg_.idc_source == IdcSource::kReactive)
        i_q_ = n++;
    if (cfg_.idc_source == IdcSource::kPid) {
        i_pid_ = n;
        n += 2;
    }
    if (cfg_.eta_source == EtaSource::kTrack) i_eta_ = n++;
    n_ = static_cast<std::size_t>(n);
}

void MatchingController::init(const PlantState& s0, double* xc) const {
    const Vec2 xi = polar_unit(cfg_.theta0);
    xc[0] = xi.a;
    xc[1] = xi.b;
    if (i_mu_ >= 0) {
        xc[i_mu_] = cfg_.mu0;
        xc[i_el_] = 0.0;
        xc[i_ec_] = 0.0;
    }
    if (i_q_ >= 0) xc[i_q_] = 0.0;
    if (i_pid_ >= 0) {
        xc[i_pid_] = 0.0;
        xc[i_pid_ + 1] = cfg_.v_dc_ref - s0.v_dc;  // no derivative kick at start
    }
    if (i_eta_ >= 0) xc[i_eta_] = cfg_.eta0;
}

Actuation MatchingController::actuate(const Measurements& m, const double* xc) const {
    Actuation a;
    const double v = m.s.v_dc;

    a.mu = p_.mu;
    if (cfg_.mu_source == MuSource::kAmpTrack) {
        a.mu = std::clamp(xc[i_mu_], 0.0, 1.0);
    } else if (cfg_.mu_source == MuSource::kReactive) {
        const ShapedValue s = reactive_shape(cfg_.reactive, xc[i_q_]);
        a.mu = s.value;
        a.limited = s.clamped;
    }

    a.eta = p_.eta;
    if (cfg_.eta_source == EtaSource::kTrack) {
        a.eta = xc[i_eta_];
    } else if (cfg_.eta_source == EtaSource::kReactive) {
        const ShapedValue s = reactive_shape(cfg_.reactive, xc[i_q_]);
        a.eta = s.value;
        a.limited = s.clamped;
    }

    a.i_dc = p_.i_dc;
    if (cfg_.idc_source == IdcSource::kPid) {
        const IdcPidState st{xc[i_pid_], xc[i_pid_ + 1]};
        const double raw = p_.i_dc + idc_pid_output(cfg_.pid, st, cfg_.v_dc_ref - v);
        a.i_dc = std::max(raw, 0.0);
        a.limited = raw < 0.0;
    } else if (cfg_.idc_source == IdcSource::kReactive) {
        const ShapedValue s = reactive_shape(cfg_.reactive, xc[i_q_]);
        a.i_dc = s.value;
        a.limited = s.clamped;
    }

    const Vec2 xi{xc[0], xc[1]};
    a.m = matching_modulation(a.mu, xi);
    a.theta = std::atan2(-xi.a, xi.b);
    return a;
}

void MatchingController::deriv(const Measurements& m, const double* xc, const Actuation& a,
                               const PlantState& pd, double* dxc) const {
    const double v = m.s.v_dc;
    const Vec2 dxi = (a.eta * v) * j2({xc[0], xc[1]});
    dxc[0] = dxi.a;
    dxc[1] = dxi.b;
    if (i_mu_ >= 0) {
        AmpTrackState st;
        st.int_el = xc[i_el_];
        st.int_ec = xc[i_ec_];
        st.mu_dyn = xc[i_mu_];
        const AmpTrackMeas am{norm(m.s.i_ab), norm(m.s.v_ab), norm(m.i_load), v, pd.v_dc};
        const AmpTrackRates r = amp_track_rates(cfg_.amp, st, am);
        dxc[i_mu_] = r.d_mu;
        dxc[i_el_] = r.d_int_el;
        dxc[i_ec_] = r.d_int_ec;
    }
    if (i_q_ >= 0) {
        const Vec2 v_x = a.m * (0.5 * v);
        const double q_x = instantaneous_pq(v_x, m.s.i_ab).q;
        dxc[i_q_] = cfg_.reactive.q_filter * (q_x - xc[i_q_]);
    }
    if (i_pid_ >= 0) {
        const double e = cfg_.v_dc_ref - v;
        dxc[i_pid_] = a.limited && e < 0.0 ? 0.0 : e;
        dxc[i_pid_ + 1] = cfg_.pid.n_filter * (e - xc[i_pid_ + 1]);
    }
    if (i_eta_ >= 0) dxc[i_eta_] = 0.0;
}

void MatchingController::begin_step(const Measurements& m, const double* xc, const Actuation&,
                                    const PlantState& pd, double dt) {
    if (i_eta_ >= 0) {
        EtaTrackState st;
        st.eta_dyn = xc[i_eta_];
        pending_eta_ = eta_track_step(cfg_.eta_track, p_, st, m.s.v_dc, pd.v_dc, dt).first;
    }
}

void MatchingController::after_step(double* xc) {
    const double n = std::hypot(xc[0], xc[1]);
    if (n > 0.0) {
        xc[0] /= n;
        xc[1] /= n;
    }
    if (i_mu_ >= 0) xc[i_mu_] = std::clamp(xc[i_mu_], 0.0, 1.0);
    if (pending_eta_) {
        xc[i_eta_] = *pending_eta_;
        pending_eta_.reset();
    }
}

// ---- converter system -------------------------------------------------------

ConverterSystem::ConverterSystem(const ConverterParams& p, LoadModel load, std::unique_ptr<Controller> ctrl,
                                 bool filter)
    : p_(p), load_(std::move(load)), ctrl_(std::move(ctrl)), filter_(filter) {
    p_.validate();
    load_.validate();
    if (!ctrl_) throw ConfigError("converter system needs a controller");
    if (!filter_ && ctrl_->needs_ac())
        throw ConfigError("the filterless model only supports controllers that read v_dc alone");
}

ConverterSystem::Eval ConverterSystem::evaluate(double t, const double* x, const LoadSegment& seg) const {
    Eval e;
    e.meas.t = t;
    e.meas.s = PlantState::unpack(x);
    const double* xc = x + PlantState::kSize;
    if (filter_) {
        e.meas.i_load = load_current(seg, e.meas.s.v_ab);
        e.act = ctrl_->actuate(e.meas, xc);
        e.pd = plant_deriv(p_, e.meas.s, e.act.m, e.act.i_dc, e.meas.i_load);
        return e;
    }
    e.meas.s.i_ab = {};
    e.meas.s.v_ab = {};
    e.act = ctrl_->actuate(e.meas, xc);
    const Vec2 v_x = e.act.m * (0.5 * e.meas.s.v_dc);
    const Vec2 i = load_current(seg, v_x);
    e.meas.s.v_ab = v_x;
    e.meas.s.i_ab = i;
    e.meas.i_load = i;
    e.pd.v_dc = (-p_.g_dc * e.meas.s.v_dc + e.act.i_dc - 0.5 * dot(e.act.m, i)) / p_.c_dc;
    const GammaDeriv g = gamma_deriv(p_, e.meas.s.i_gamma, e.meas.s.v_gamma);
    e.pd.i_gamma = g.di_gamma;
    e.pd.v_gamma = g.dv_gamma;
    return e;
}

void ConverterSystem::deriv(double t, const double* x, double* dx) {
    const LoadSegment& seg = seg_ ? *seg_ : load_.active(t);
    const Eval e = evaluate(t, x, seg);
    e.pd.pack(dx);
    ctrl_->deriv(e.meas, x + PlantState::kSize, e.act, e.pd, dx + PlantState::kSize);
    dx[size() - 1] = e.act.i_dc * e.meas.s.v_dc - dot(e.meas.i_load, e.meas.s.v_ab);
}

void ConverterSystem::begin_step(double t, double dt, const double* x) {
    seg_ = &load_.active(t + 0.5 * dt);
    const Eval e = evaluate(t, x, *seg_);
    ctrl_->begin_step(e.meas, x + PlantState::kSize, e.act, e.pd, dt);
}

void ConverterSystem::after_step(double, double, double* x) { ctrl_->after_step(x + PlantState::kSize); }

std::vector<double> ConverterSystem::initial_state(const PlantState& s0) const {
    std::vector<double> x(size(), 0.0);
    PlantState s = s0;
    if (!filter_) {
        s.i_ab = {};
        s.v_ab = {};
    }
    s.pack(x.data());
    ctrl_->init(s, x.data() + PlantState::kSize);
    return x;
}

TraceSample ConverterSystem::sample(double t, const std::vector<double>& x) const {
    const Eval e = evaluate(t, x.data(), load_.active(t));
    TraceSample s;
    s.t = t;
    s.s = e.meas.s;
    s.m = e.act.m;
    s.i_load = e.meas.i_load;
    s.v_x = e.act.m * (0.5 * e.meas.s.v_dc);
    s.i_dc = e.act.i_dc;
    const PowerPQ px = instantaneous_pq(s.v_x, s.s.i_ab);
    const PowerPQ pl = instantaneous_pq(s.s.v_ab, s.i_load);
    s.p_x = px.p;
    s.q_x = px.q;
    s.p_load = pl.p;
    s.q_load = pl.q;
    s.amp_vx = norm(s.v_x);
    s.amp_v = norm(s.s.v_ab);
    s.amp_il = norm(s.s.i_ab);
    if (filter_) {
        const double n2 = dot(s.s.v_ab, s.s.v_ab);
        s.omega_est = n2 > 1e-18 ? cross(s.s.v_ab, e.pd.v_ab) / n2 : 0.0;
        s.storage = storage_open(s.s, p_);
    } else {
        s.omega_est = e.act.eta * e.meas.s.v_dc;
        s.storage = 0.5 * p_.c_dc * e.meas.s.v_dc * e.meas.s.v_dc;
    }
    s.supply_int = x.back();
    s.mu = e.act.mu;
    s.eta = e.act.eta;
    s.theta = e.act.theta;
    s.saturated = e.act.saturated;
    return s;
}

void ConverterSystem::run(const PlantState& s0, const SimConfig& cfg, SimTrace& out) {
    out = SimTrace{};
    out.dt_sample = cfg.dt * cfg.record_every;
    std::vector<double> x = initial_state(s0);
    bool sat = false, undef = false, lim = false;
    seg_ = nullptr;
    auto obs = [&](std::size_t, double t, const std::vector<double>& xs, bool event) {
        TraceSample s = sample(t, xs);
        if (event) s.event = "load_step";
        sat = sat || s.saturated;
        out.samples.push_back(std::move(s));
        const Eval e = evaluate(t, xs.data(), load_.active(t));
        undef = undef || e.act.undefined;
        lim = lim || e.act.limited;
    };
    auto finish = [&] {
        seg_ = nullptr;
        if (sat) out.flags.push_back("modulation_saturated");
        if (undef) out.flags.push_back("controller_undefined");
        if (lim) out.flags.push_back("outer_loop_limited");
    };
    try {
        integrate(*this, x, cfg, obs);
    } catch (...) {
        finish();
        throw;
    }
    finish();
}

SimTrace ConverterSystem::run(const PlantState& s0, const SimConfig& cfg) {
    SimTrace out;
    run(s0, cfg, out);
    return out;
}

}  // namespace gfm
