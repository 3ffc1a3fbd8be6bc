#include "gfm/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <ostream>

#include "gfm/errors.hpp"

namespace gfm {

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
    if (record_every < 1) throw ConfigError("record_every must be >= 1");
    if (!(steady_tol > 0.0)) throw ConfigError("steady_tol must be positive");
    if (!(steady_window > 0.0)) throw ConfigError("steady_window must be positive");
}

std::size_t SimConfig::steps() const {
    return static_cast<std::size_t>(std::llround(t_end / dt));
}

Rk4::Rk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), w_(n) {}

void Rk4::step(OdeSystem& sys, double t, double dt, std::vector<double>& x) {
    const std::size_t n = x.size();
    const double h2 = 0.5 * dt;
    sys.deriv(t, x.data(), k1_.data());
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + h2 * k1_[i];
    sys.deriv(t + h2, w_.data(), k2_.data());
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + h2 * k2_[i];
    sys.deriv(t + h2, w_.data(), k3_.data());
    for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + dt * k3_[i];
    sys.deriv(t + dt, w_.data(), k4_.data());
    const double h6 = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i)
        x[i] += h6 * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
}

void integrate(OdeSystem& sys, std::vector<double>& x, const SimConfig& cfg, const Observer& obs) {
    cfg.validate();
    if (x.size() != sys.size()) throw ConfigError("initial state has wrong dimension");
    for (double v : x)
        if (!std::isfinite(v)) throw ConfigError("initial state is not finite");

    const std::size_t n_steps = cfg.steps();
    std::vector<std::size_t> event_steps;
    for (double te : sys.event_times()) {
        const double k = te / cfg.dt;
        const double kr = std::round(k);
        if (std::abs(k - kr) > 1e-6 * std::max(1.0, kr))
            throw ConfigError("event time " + format_double(te) + " is not on the dt grid");
        if (kr > 0) event_steps.push_back(static_cast<std::size_t>(kr));
    }
    std::sort(event_steps.begin(), event_steps.end());

    Rk4 rk(x.size());
    std::size_t next_event = 0;
    bool pending_event = false;
    auto consume_events = [&](std::size_t k) {
        while (next_event < event_steps.size() && event_steps[next_event] <= k) {
            pending_event = true;
            ++next_event;
        }
    };
    const auto rec = static_cast<std::size_t>(cfg.record_every);
    consume_events(0);
    obs(0, 0.0, x, pending_event);
    pending_event = false;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        sys.begin_step(t, cfg.dt, x.data());
        rk.step(sys, t, cfg.dt, x);
        const double t1 = static_cast<double>(k + 1) * cfg.dt;
        sys.after_step(t1, cfg.dt, x.data());
        for (double v : x)
            if (!std::isfinite(v)) throw DivergenceError("non-finite state", t);
        consume_events(k + 1);
        if ((k + 1) % rec == 0) {
            obs(k + 1, t1, x, pending_event);
            pending_event = false;
        }
    }
}

std::vector<Vec2> SimTrace::column(Vec2 TraceSample::*field) const {
    std::vector<Vec2> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.*field);
    return out;
}

std::vector<double> SimTrace::column(double TraceSample::*field) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.*field);
    return out;
}

std::size_t SimTrace::index_at(double time) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), time - 1e-12,
                               [](const TraceSample& s, double tt) { return s.t < tt; });
    return static_cast<std::size_t>(it - samples.begin());
}

AmpFreq estimate_amp_freq(const std::vector<Vec2>& z, double dt) {
    return estimate_amp_freq(z, dt, 0, z.size());
}

AmpFreq estimate_amp_freq(const std::vector<Vec2>& z, double dt, std::size_t begin, std::size_t end) {
    end = std::min(end, z.size());
    if (end < begin + 3) throw NumericError("estimate_amp_freq: window needs at least 3 samples");
    double amp = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        const double n = norm(z[k]);
        if (n < 1e-9) throw NumericError("estimate_amp_freq: amplitude undefined (signal at zero)");
        amp += n;
    }
    amp /= static_cast<double>(end - begin);
    double w = 0.0;
    for (std::size_t k = begin + 1; k + 1 < end; ++k) {
        const Vec2 dz = (z[k + 1] - z[k - 1]) / (2.0 * dt);
        w += (z[k].a * dz.b - z[k].b * dz.a) / dot(z[k], z[k]);
    }
    w /= static_cast<double>(end - begin - 2);
    return {amp, w};
}

namespace {

// Relative spread (max - min) / max(|mean|, floor) of each window of length w.
std::vector<double> window_spread(const std::vector<double>& x, std::size_t w) {
    std::vector<double> out;
    if (x.size() < w || w == 0) return out;
    std::deque<std::size_t> mx, mn;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (!mx.empty() && x[mx.back()] <= x[i]) mx.pop_back();
        mx.push_back(i);
        while (!mn.empty() && x[mn.back()] >= x[i]) mn.pop_back();
        mn.push_back(i);
        sum += x[i];
        if (i >= w) sum -= x[i - w];
        if (i + 1 >= w) {
            const std::size_t start = i + 1 - w;
            while (mx.front() < start) mx.pop_front();
            while (mn.front() < start) mn.pop_front();
            const double mean = sum / static_cast<double>(w);
            const double den = std::max(std::abs(mean), 1e-9);
            out.push_back((x[mx.front()] - x[mn.front()]) / den);
        }
    }
    return out;
}

}  // namespace

std::optional<double> settle_time(const std::vector<std::vector<double>>& signals, double dt,
                                  double window, double tol) {
    if (signals.empty()) return std::nullopt;
    const std::size_t n = signals.front().size();
    const auto w = static_cast<std::size_t>(std::llround(window / dt)) + 1;
    if (n < w) return std::nullopt;
    std::vector<bool> ok(n - w + 1, true);
    for (const auto& s : signals) {
        const auto sp = window_spread(s, w);
        for (std::size_t k = 0; k < sp.size(); ++k)
            if (!(sp[k] < tol)) ok[k] = false;
    }
    // earliest start from which every later window is steady
    std::size_t k = ok.size();
    while (k > 0 && ok[k - 1]) --k;
    if (k == ok.size()) return std::nullopt;
    return static_cast<double>(k) * dt;
}

std::optional<SteadyState> detect_steady_state(const SimTrace& trace, const SimConfig& cfg) {
    if (trace.samples.size() < 3) return std::nullopt;
    const std::vector<std::vector<double>> sig = {
        trace.column(&TraceSample::omega_est), trace.column(&TraceSample::amp_v),
        trace.column(&TraceSample::amp_vx), trace.column(&TraceSample::amp_il)};
    std::vector<double> vdc;
    vdc.reserve(trace.samples.size());
    for (const auto& s : trace.samples) vdc.push_back(s.s.v_dc);
    auto all = sig;
    all.push_back(vdc);
    const auto ts = settle_time(all, trace.dt_sample, cfg.steady_window, cfg.steady_tol);
    if (!ts) return std::nullopt;
    SteadyState out;
    out.t_settle = trace.samples.front().t + *ts;
    const std::size_t w = static_cast<std::size_t>(std::llround(cfg.steady_window / trace.dt_sample)) + 1;
    const std::size_t n = trace.samples.size();
    const std::size_t b = n - std::min(n, w);
    for (std::size_t k = b; k < n; ++k) {
        const auto& s = trace.samples[k];
        out.v_dc += s.s.v_dc;
        out.omega += s.omega_est;
        out.amp_v += s.amp_v;
        out.amp_vx += s.amp_vx;
        out.amp_il += s.amp_il;
    }
    const double cnt = static_cast<double>(n - b);
    out.v_dc /= cnt;
    out.omega /= cnt;
    out.amp_v /= cnt;
    out.amp_vx /= cnt;
    out.amp_il /= cnt;
    return out;
}

const char* const kCsvHeader =
    "t,v_dc,i_alpha,i_beta,v_alpha,v_beta,m_alpha,m_beta,P_x,Q_x,P_load,Q_load,"
    "amp_vx,amp_v,amp_il,omega_est,event,i_dc,supply_int";

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const SimTrace& trace, std::ostream& os) {
    os << kCsvHeader << '\n';
    for (const auto& s : trace.samples) {
        const double cols[] = {s.t,      s.s.v_dc,  s.s.i_ab.a, s.s.i_ab.b, s.s.v_ab.a,
                               s.s.v_ab.b, s.m.a,   s.m.b,      s.p_x,      s.q_x,
                               s.p_load, s.q_load,  s.amp_vx,   s.amp_v,    s.amp_il,
                               s.omega_est};
        for (double c : cols) os << format_double(c) << ',';
        os << s.event << ',' << format_double(s.i_dc) << ',' << format_double(s.supply_int) << '\n';
    }
}

}  // namespace gfm
