#include "gfm/network.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gfm/errors.hpp"

namespace gfm {

Topology parse_topology(const std::string& s) {
    if (s == "tree") return Topology::kTree;
    if (s == "star") return Topology::kStar;
    throw ConfigError("unknown topology '" + s + "' (expected tree or star)");
}

std::string topology_name(Topology t) { return t == Topology::kTree ? "tree" : "star"; }

void NetworkParams::validate() const {
    if (!(r_net > 0.0) || !std::isfinite(r_net)) throw ConfigError("r_net must be positive");
    if (!(l_net > 0.0) || !std::isfinite(l_net)) throw ConfigError("l_net must be positive");
    for (const auto& c : conv) c.validate();
    for (const auto& l : bus_loads) l.validate();
    if (topology == Topology::kStar) {
        if (star_load.empty()) throw ConfigError("star topology needs a load resistance schedule");
        for (std::size_t k = 0; k < star_load.size(); ++k) {
            if (!(star_load[k].r > 0.0) || !std::isfinite(star_load[k].r))
                throw ConfigError("star load resistance must be positive");
            if (k > 0 && !(star_load[k].t_start > star_load[k - 1].t_start))
                throw ConfigError("star load start times must be strictly increasing");
        }
        if (star_load.front().t_start > 0.0) throw ConfigError("star load schedule must start at t = 0");
    }
}

double NetworkParams::star_resistance(double t) const {
    auto it = std::upper_bound(star_load.begin(), star_load.end(), t,
                               [](double tt, const StarLoadSegment& s) { return tt < s.t_start; });
    if (it == star_load.begin()) throw ConfigError("no active star load at this time");
    return (it - 1)->r;
}

std::vector<Vec2> NetworkTrace::column(int bus, Vec2 PlantState::*field) const {
    std::vector<Vec2> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.bus[bus].s.*field);
    return out;
}

NetworkSystem::NetworkSystem(NetworkParams np, std::array<std::unique_ptr<Controller>, 2> ctrl)
    : np_(std::move(np)), ctrl_(std::move(ctrl)) {
    np_.validate();
    if (!ctrl_[0] || !ctrl_[1]) throw ConfigError("network needs a controller on each bus");
    off_[0] = 0;
    off_[1] = PlantState::kSize + ctrl_[0]->size();
    off_line_ = off_[1] + PlantState::kSize + ctrl_[1]->size();
    off_sup_ = off_line_ + 2 * np_.line_count();
    n_ = off_sup_ + 2;
}

std::vector<double> NetworkSystem::event_times() const {
    std::vector<double> t = np_.bus_loads[0].step_times();
    const auto t2 = np_.bus_loads[1].step_times();
    t.insert(t.end(), t2.begin(), t2.end());
    if (np_.topology == Topology::kStar)
        for (std::size_t k = 1; k < np_.star_load.size(); ++k) t.push_back(np_.star_load[k].t_start);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

NetworkSystem::Eval NetworkSystem::evaluate(double t, const double* x) const {
    const double tl = latched_ ? t_latch_ : t;
    Eval e;
    const double* xl = x + off_line_;
    e.i_net[0] = {xl[0], xl[1]};
    if (np_.topology == Topology::kStar) e.i_net[1] = {xl[2], xl[3]};
    std::array<PlantState, 2> s{PlantState::unpack(x + off_[0]), PlantState::unpack(x + off_[1])};
    std::array<Vec2, 2> i_out;
    for (int k = 0; k < 2; ++k) i_out[k] = load_current(np_.bus_loads[k].active(tl), s[k].v_ab);
    if (np_.topology == Topology::kTree) {
        i_out[0] += e.i_net[0];
        i_out[1] -= e.i_net[0];
        e.di_net[0] = (s[0].v_ab - s[1].v_ab - np_.r_net * e.i_net[0]) / np_.l_net;
    } else {
        e.v_load = np_.star_resistance(tl) * (e.i_net[0] + e.i_net[1]);
        for (int k = 0; k < 2; ++k) {
            i_out[k] += e.i_net[k];
            e.di_net[k] = (s[k].v_ab - e.v_load - np_.r_net * e.i_net[k]) / np_.l_net;
        }
    }
    for (int k = 0; k < 2; ++k) {
        e.meas[k].t = t;
        e.meas[k].s = s[k];
        e.meas[k].i_load = i_out[k];
        e.act[k] = ctrl_[k]->actuate(e.meas[k], x + off_[k] + PlantState::kSize);
        e.pd[k] = plant_deriv(np_.conv[k], s[k], e.act[k].m, e.act[k].i_dc, i_out[k]);
    }
    return e;
}

void NetworkSystem::deriv(double t, const double* x, double* dx) {
    const Eval e = evaluate(t, x);
    for (int k = 0; k < 2; ++k) {
        e.pd[k].pack(dx + off_[k]);
        const std::size_t oc = off_[k] + PlantState::kSize;
        ctrl_[k]->deriv(e.meas[k], x + oc, e.act[k], e.pd[k], dx + oc);
    }
    for (int k = 0; k < 2; ++k)
        dx[off_sup_ + k] = e.act[k].i_dc * e.meas[k].s.v_dc - dot(e.meas[k].i_load, e.meas[k].s.v_ab);
    double* dl = dx + off_line_;
    dl[0] = e.di_net[0].a;
    dl[1] = e.di_net[0].b;
    if (np_.topology == Topology::kStar) {
        dl[2] = e.di_net[1].a;
        dl[3] = e.di_net[1].b;
    }
}

void NetworkSystem::begin_step(double t, double dt, const double* x) {
    latched_ = true;
    t_latch_ = t + 0.5 * dt;
    const Eval e = evaluate(t, x);
    for (int k = 0; k < 2; ++k)
        ctrl_[k]->begin_step(e.meas[k], x + off_[k] + PlantState::kSize, e.act[k], e.pd[k], dt);
}

void NetworkSystem::after_step(double, double, double* x) {
    for (int k = 0; k < 2; ++k) ctrl_[k]->after_step(x + off_[k] + PlantState::kSize);
}

std::vector<double> NetworkSystem::initial_state(const std::array<PlantState, 2>& s0) const {
    std::vector<double> x(n_, 0.0);
    for (int k = 0; k < 2; ++k) {
        s0[k].pack(x.data() + off_[k]);
        ctrl_[k]->init(s0[k], x.data() + off_[k] + PlantState::kSize);
    }
    return x;
}

NetworkSample NetworkSystem::sample(double t, const std::vector<double>& x) const {
    const Eval e = evaluate(t, x.data());
    NetworkSample ns;
    ns.t = t;
    ns.i_net = e.i_net;
    ns.v_load = e.v_load;
    for (int k = 0; k < 2; ++k) {
        TraceSample& s = ns.bus[k];
        s.t = t;
        s.s = e.meas[k].s;
        s.m = e.act[k].m;
        s.i_load = e.meas[k].i_load;
        s.v_x = e.act[k].m * (0.5 * s.s.v_dc);
        s.i_dc = e.act[k].i_dc;
        const PowerPQ px = instantaneous_pq(s.v_x, s.s.i_ab);
        const PowerPQ pl = instantaneous_pq(s.s.v_ab, s.i_load);
        s.p_x = px.p;
        s.q_x = px.q;
        s.p_load = pl.p;
        s.q_load = pl.q;
        s.amp_vx = norm(s.v_x);
        s.amp_v = norm(s.s.v_ab);
        s.amp_il = norm(s.s.i_ab);
        const double n2 = dot(s.s.v_ab, s.s.v_ab);
        const Vec2 dv = e.pd[k].v_ab;
        s.omega_est = n2 > 1e-18 ? (s.s.v_ab.a * dv.b - s.s.v_ab.b * dv.a) / n2 : 0.0;
        s.storage = storage_open(s.s, np_.conv[k]);
        s.supply_int = x[off_sup_ + k];
        s.mu = e.act[k].mu;
        s.eta = e.act[k].eta;
        s.theta = e.act[k].theta;
        s.saturated = e.act[k].saturated;
    }
    return ns;
}

void NetworkSystem::run(const std::array<PlantState, 2>& s0, const SimConfig& cfg, NetworkTrace& out) {
    out = NetworkTrace{};
    out.dt_sample = cfg.dt * cfg.record_every;
    out.topology = np_.topology;
    std::vector<double> x = initial_state(s0);
    bool sat = false;
    latched_ = false;
    auto obs = [&](std::size_t, double t, const std::vector<double>& xs, bool event) {
        const bool was = latched_;
        latched_ = false;
        NetworkSample s = sample(t, xs);
        latched_ = was;
        if (event) s.event = "load_step";
        sat = sat || s.bus[0].saturated || s.bus[1].saturated;
        out.samples.push_back(std::move(s));
    };
    auto finish = [&] {
        latched_ = false;
        if (sat) out.flags.push_back("modulation_saturated");
    };
    try {
        integrate(*this, x, cfg, obs);
    } catch (...) {
        finish();
        throw;
    }
    finish();
}

NetworkBuild build_network(const NetworkParams& np, std::array<std::unique_ptr<Controller>, 2> ctrl,
                           const std::array<PlantState, 2>& s0) {
    NetworkBuild b;
    b.sys = std::make_unique<NetworkSystem>(np, std::move(ctrl));
    b.x0 = b.sys->initial_state(s0);
    return b;
}

void write_network_csv(const NetworkTrace& trace, std::ostream& os) {
    const char* bus_cols[] = {"v_dc", "i_alpha", "i_beta", "v_alpha", "v_beta", "m_alpha", "m_beta",
                              "P_x",  "Q_x",     "P_load", "Q_load",  "amp_vx", "amp_v",  "amp_il",
                              "omega_est"};
    os << 't';
    for (int k = 1; k <= 2; ++k)
        for (const char* c : bus_cols) os << ',' << c << '_' << k;
    if (trace.topology == Topology::kTree)
        os << ",inet_alpha,inet_beta";
    else
        os << ",inet_alpha_1,inet_beta_1,inet_alpha_2,inet_beta_2,v_load_alpha,v_load_beta";
    os << ",event\n";
    for (const auto& ns : trace.samples) {
        os << format_double(ns.t);
        for (const auto& s : ns.bus) {
            const double cols[] = {s.s.v_dc, s.s.i_ab.a, s.s.i_ab.b, s.s.v_ab.a, s.s.v_ab.b,
                                   s.m.a,    s.m.b,      s.p_x,      s.q_x,      s.p_load,
                                   s.q_load, s.amp_vx,   s.amp_v,    s.amp_il,   s.omega_est};
            for (double c : cols) os << ',' << format_double(c);
        }
        os << ',' << format_double(ns.i_net[0].a) << ',' << format_double(ns.i_net[0].b);
        if (trace.topology == Topology::kStar)
            os << ',' << format_double(ns.i_net[1].a) << ',' << format_double(ns.i_net[1].b) << ','
               << format_double(ns.v_load.a) << ',' << format_double(ns.v_load.b);
        os << ',' << ns.event << '\n';
    }
}

}  // namespace gfm
