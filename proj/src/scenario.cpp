#include "gfm/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gfm/analysis.hpp"
#include "gfm/errors.hpp"

namespace gfm {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Reads one JSON object and rejects keys that were never asked for.
class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    double num(const char* key, double def) {
        used_.insert(key);
        if (!j_.contains(key)) return def;
        return number_at(key);
    }

    double num(const char* key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(where_ + ": missing '" + key + "'");
        return number_at(key);
    }

    int integer(const char* key, int def) {
        used_.insert(key);
        if (!j_.contains(key)) return def;
        const Json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        return v.get<int>();
    }

    bool flag(const char* key, bool def) {
        used_.insert(key);
        if (!j_.contains(key)) return def;
        const Json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected true or false");
        return v.get<bool>();
    }

    std::string str(const char* key, const std::string& def) {
        used_.insert(key);
        if (!j_.contains(key)) return def;
        const Json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    const Json* sub(const char* key) {
        used_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    double number_at(const char* key) const {
        const Json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(where_ + "." + key + ": not finite");
        return d;
    }

    const Json& j_;
    std::string where_;
    std::set<std::string> used_;
};

PlantState parse_initial(const Json* j, const std::string& where) {
    PlantState s;
    if (!j) return s;
    Reader r(*j, where);
    s.v_dc = r.num("v_dc_volts", 0.0);
    s.i_ab = {r.num("i_alpha_amperes", 0.0), r.num("i_beta_amperes", 0.0)};
    s.v_ab = {r.num("v_alpha_volts", 0.0), r.num("v_beta_volts", 0.0)};
    s.i_gamma = r.num("i_gamma_amperes", 0.0);
    s.v_gamma = r.num("v_gamma_volts", 0.0);
    r.finish();
    return s;
}

LoadModel parse_load(const Json* j, const std::string& where) {
    LoadModel m;
    if (!j) {
        m.schedule.push_back({});
        return m;
    }
    if (!j->is_array() || j->empty()) throw ConfigError(where + ": expected a non-empty list of segments");
    for (std::size_t k = 0; k < j->size(); ++k) {
        Reader r((*j)[k], where + "[" + std::to_string(k) + "]");
        LoadSegment s;
        s.t_start = r.num("t_start_seconds", 0.0);
        s.g = r.num("g_siemens", 0.0);
        s.b = r.num("b_siemens", 0.0);
        s.i_const = {r.num("i_const_alpha_amperes", 0.0), r.num("i_const_beta_amperes", 0.0)};
        r.finish();
        m.schedule.push_back(s);
    }
    if (m.schedule.front().t_start != 0.0) throw ConfigError(where + ": first segment must start at 0");
    m.validate();
    return m;
}

SimConfig parse_sim(const Json* j) {
    SimConfig c;
    if (j) {
        Reader r(*j, "sim");
        c.dt = r.num("dt_seconds", c.dt);
        c.t_end = r.num("t_end_seconds", c.t_end);
        c.record_every = r.integer("record_every", c.record_every);
        c.steady_tol = r.num("steady_tol", c.steady_tol);
        c.steady_window = r.num("steady_window_seconds", c.steady_window);
        r.finish();
    }
    c.validate();
    return c;
}

DroopParams parse_droop(const Json* j, const std::string& where) {
    DroopParams d;
    if (!j) return d;
    Reader r(*j, where);
    d.omega0 = r.num("omega0_rad_per_second", d.omega0);
    d.v0_hat = r.num("v0_hat_volts", d.v0_hat);
    d.p0 = r.num("p0_watts", d.p0);
    d.q0 = r.num("q0_var", d.q0);
    d.n_f = r.num("n_f_rad_per_second_per_watt", d.n_f);
    d.n_a = r.num("n_a_volts_per_var", d.n_a);
    r.finish();
    d.validate();
    return d;
}

std::unique_ptr<Controller> make_inner(Reader& r, const std::string& type, const ConverterParams& p) {
    InnerLoopConfig c;
    c.gains = inner_gains_from_poles(r.num("lambda0_per_second", -5e4), r.num("lambda_l_per_second", -5e5), p);
    if (type == "inner_loop") {
        c.source = RefSource::kSinusoid;
        if (const Json* ref = r.sub("reference")) {
            Reader rr(*ref, r.path("reference"));
            c.amp = rr.num("amplitude_volts", c.amp);
            c.omega = 2.0 * kPi * rr.num("frequency_hz", 50.0);
            c.theta0 = rr.num("theta0_radians", 0.0);
            rr.finish();
        }
    } else if (type == "droop") {
        c.source = RefSource::kDroop;
        c.droop = parse_droop(r.sub("droop"), r.path("droop"));
        c.theta0 = r.num("theta0_radians", 0.0);
    } else if (type == "polar_voc") {
        c.source = RefSource::kPolarVoc;
        c.polar.droop = parse_droop(r.sub("droop"), r.path("droop"));
        c.polar.lambda_osc = r.num("lambda_osc_per_second", c.polar.lambda_osc);
        c.theta0 = r.num("theta0_radians", 0.0);
        c.v_hat0 = r.num("v_hat0_volts", c.polar.droop.v0_hat);
    } else {
        c.source = RefSource::kVdpVoc;
        c.vdp.mu_vdp = r.num("mu_vdp_per_second", c.vdp.mu_vdp);
        c.vdp.kappa = r.num("kappa", c.vdp.kappa);
        c.vdp.omega0 = r.num("omega0_rad_per_second", c.vdp.omega0);
        c.amp = r.num("amplitude_volts", c.amp);
        if (const Json* init = r.sub("init")) {
            Reader ri(*init, r.path("init"));
            c.vdp_init.x1a = ri.num("x1a", c.vdp_init.x1a);
            c.vdp_init.x2a = ri.num("x2a", c.vdp_init.x2a);
            c.vdp_init.x1b = ri.num("x1b", c.vdp_init.x1b);
            c.vdp_init.x2b = ri.num("x2b", c.vdp_init.x2b);
            ri.finish();
        }
    }
    r.finish();
    return std::make_unique<InnerLoopController>(p, c);
}

std::unique_ptr<Controller> make_open_loop(Reader& r, const ConverterParams& p) {
    OpenLoopParams o;
    o.lambda_m = r.num("lambda_m_per_second", o.lambda_m);
    o.vm_ref = r.num("vm_ref", o.vm_ref);
    o.omega_ref = r.num("omega_ref_rad_per_second", o.omega_ref);
    o.capacitor_feedback = r.flag("capacitor_feedback", false);
    o.v_dc_ref = r.num("v_dc_ref_volts", o.v_dc_ref);
    const double vm0 = r.num("vm0", 0.0);
    const double th0 = r.num("theta0_radians", 0.0);
    r.finish();
    return std::make_unique<OpenLoopController>(p, o, vm0, th0);
}

std::unique_ptr<Controller> make_matching(Reader& r, const ConverterParams& p) {
    MatchingConfig mc;
    mc.theta0 = r.num("theta0_radians", 0.0);
    mc.eta0 = p.eta;
    mc.mu0 = p.mu;

    if (const Json* j = r.sub("mu")) {
        Reader m(*j, r.path("mu"));
        const std::string src = m.str("source", "constant");
        if (src == "amp_track") {
            mc.mu_source = MuSource::kAmpTrack;
            mc.mu0 = m.num("mu0", p.mu);
            auto& a = mc.amp;
            a.k_p = m.num("k_p", a.k_p);
            a.k_i = m.num("k_i", a.k_i);
            a.k_x = m.num("k_x", a.k_x);
            a.lambda_x = m.num("lambda_x_per_second", a.lambda_x);
            a.lambda0 = m.num("lambda0_per_second", a.lambda0);
            a.voltage_mode = m.flag("voltage_mode", false);
            a.il_ref = m.num("il_ref_amperes", a.il_ref);
            a.v_ref = m.num("v_ref_volts", a.v_ref);
            a.k_cp = m.num("k_cp", a.k_cp);
            a.k_ci = m.num("k_ci", a.k_ci);
        } else if (src == "reactive") {
            mc.mu_source = MuSource::kReactive;
        } else if (src != "constant") {
            throw ConfigError(r.path("mu") + ": unknown source '" + src + "'");
        }
        m.finish();
    }
    if (const Json* j = r.sub("eta")) {
        Reader m(*j, r.path("eta"));
        const std::string src = m.str("source", "constant");
        if (src == "track") {
            mc.eta_source = EtaSource::kTrack;
            mc.eta0 = m.num("eta0", p.eta);
            auto& e = mc.eta_track;
            e.tau = m.num("tau_per_second", e.tau);
            e.omega_ref = m.num("omega_ref_rad_per_second", e.omega_ref);
            e.j_extra = m.num("j_extra", e.j_extra);
            const std::string law = m.str("law", "tracking");
            if (law == "tracking")
                e.law = EtaLaw::kTracking;
            else if (law == "vsm")
                e.law = EtaLaw::kVsm;
            else
                throw ConfigError(r.path("eta") + ": unknown law '" + law + "'");
        } else if (src == "reactive") {
            mc.eta_source = EtaSource::kReactive;
        } else if (src != "constant") {
            throw ConfigError(r.path("eta") + ": unknown source '" + src + "'");
        }
        m.finish();
    }
    if (const Json* j = r.sub("i_dc")) {
        Reader m(*j, r.path("i_dc"));
        const std::string src = m.str("source", "constant");
        if (src == "pid") {
            mc.idc_source = IdcSource::kPid;
            auto& c = mc.pid;
            c.k_p = m.num("k_p", c.k_p);
            c.k_i = m.num("k_i", c.k_i);
            c.k_d = m.num("k_d", c.k_d);
            c.n_filter = m.num("n_filter_per_second", c.n_filter);
            mc.v_dc_ref = m.num("v_dc_ref_volts", mc.v_dc_ref);
        } else if (src == "reactive") {
            mc.idc_source = IdcSource::kReactive;
        } else if (src != "constant") {
            throw ConfigError(r.path("i_dc") + ": unknown source '" + src + "'");
        }
        m.finish();
    }
    if (const Json* j = r.sub("reactive")) {
        Reader m(*j, r.path("reactive"));
        auto& rs = mc.reactive;
        rs.mode = parse_reactive_mode(m.str("mode", "mu"));
        rs.base = m.num("base", rs.mode == ReactiveMode::kMu    ? p.mu
                                : rs.mode == ReactiveMode::kEta ? p.eta
                                                                : p.i_dc);
        rs.gain = m.num("gain");
        rs.q_filter = m.num("q_filter_rad_per_second", rs.q_filter);
        m.finish();
    }
    r.finish();
    return std::make_unique<MatchingController>(p, mc);
}

std::string controller_type(const Json& spec) {
    if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string())
        throw ConfigError("controller: missing string 'type'");
    return spec.at("type").get<std::string>();
}

NetworkSpec parse_network(const Json& j, const Json& top_controller) {
    Reader r(j, "network");
    NetworkSpec ns;
    auto& np = ns.params;
    np.topology = parse_topology(r.str("topology", "tree"));
    np.r_net = r.num("r_net_ohms", np.r_net);
    np.l_net = r.num("l_net_henries", np.l_net);
    const Json* conv = r.sub("converters");
    const Json* init = r.sub("initial");
    const Json* ctrl = r.sub("controllers");
    const Json* loads = r.sub("bus_loads");
    for (int k = 0; k < 2; ++k) {
        const std::string idx = "[" + std::to_string(k) + "]";
        auto pick = [&](const Json* arr, const char* name) -> const Json* {
            if (!arr) return nullptr;
            if (!arr->is_array() || arr->size() != 2) throw ConfigError(r.path(name) + ": expected two entries");
            return &(*arr)[k];
        };
        const Json* c = pick(conv, "converters");
        np.conv[k] = c ? parse_converter(*c) : ConverterParams{};
        ns.init[k] = parse_initial(pick(init, "initial"), r.path("initial") + idx);
        const Json* cj = pick(ctrl, "controllers");
        ns.controllers[k] = cj ? *cj : top_controller;
        np.bus_loads[k] = parse_load(pick(loads, "bus_loads"), r.path("bus_loads") + idx);
    }
    if (const Json* sl = r.sub("star_load")) {
        if (!sl->is_array() || sl->empty()) throw ConfigError("network.star_load: expected a non-empty list");
        for (std::size_t k = 0; k < sl->size(); ++k) {
            Reader rs((*sl)[k], "network.star_load[" + std::to_string(k) + "]");
            np.star_load.push_back({rs.num("t_start_seconds", 0.0), rs.num("r_ohms")});
            rs.finish();
        }
    }
    r.finish();
    np.validate();
    for (int k = 0; k < 2; ++k) make_controller(ns.controllers[k], np.conv[k]);
    return ns;
}

double mean_of(const std::vector<TraceSample>& s, std::size_t b, std::size_t e, double TraceSample::*f) {
    double acc = 0.0;
    for (std::size_t k = b; k < e; ++k) acc += s[k].*f;
    return acc / static_cast<double>(e - b);
}

Json steady_json(const std::optional<SteadyState>& ss) {
    if (!ss) return nullptr;
    return {{"t_settle_seconds", ss->t_settle},
            {"v_dc_volts", ss->v_dc},
            {"omega_rad_per_second", ss->omega},
            {"frequency_hz", ss->omega / (2.0 * kPi)},
            {"amp_vx_volts", ss->amp_vx},
            {"amp_v_volts", ss->amp_v},
            {"amp_il_amperes", ss->amp_il}};
}

Json passivity_json(const SimTrace& trace) {
    const PassivityReport pa = passivity_audit(trace);
    return {{"max_violation_joules", pa.max_violation},
            {"peak_storage_joules", pa.peak_storage},
            {"relative_violation", pa.peak_storage > 0.0 ? pa.max_violation / pa.peak_storage : 0.0}};
}

}  // namespace

Json parse_json_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // byte offset -> line/column
        int line = 1, col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < upto; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(std::string("JSON syntax error at line ") + std::to_string(line) + ", column " +
                             std::to_string(col) + ": " + e.what(),
                         line, col);
    }
}

Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str());
}

ConverterParams parse_converter(const Json& j) {
    Reader r(j, "converter");
    ConverterParams p;
    p.c_dc = r.num("c_dc_farads", p.c_dc);
    p.g_dc = r.num("g_dc_siemens", p.g_dc);
    p.i_dc = r.num("i_dc_amperes", p.i_dc);
    p.r = r.num("r_ohms", p.r);
    p.l = r.num("l_henries", p.l);
    p.c = r.num("c_farads", p.c);
    p.eta = r.num("eta_rad_per_volt_second", p.eta);
    p.mu = r.num("mu", p.mu);
    r.finish();
    p.validate();
    return p;
}

std::unique_ptr<Controller> make_controller(const Json& spec, const ConverterParams& p) {
    const std::string type = controller_type(spec);
    Reader r(spec, "controller");
    r.str("type", "");
    if (type == "matching") return make_matching(r, p);
    if (type == "open_loop") return make_open_loop(r, p);
    if (type == "inner_loop" || type == "droop" || type == "polar_voc" || type == "vdp_voc")
        return make_inner(r, type, p);
    throw ConfigError("controller: unknown type '" + type + "'");
}

Scenario parse_scenario(const Json& j) {
    Reader r(j, "scenario");
    Scenario sc;
    sc.name = r.str("name", "scenario");
    const Json* conv = r.sub("converter");
    sc.params = conv ? parse_converter(*conv) : ConverterParams{};
    sc.init = parse_initial(r.sub("initial"), "initial");
    const Json* ctrl = r.sub("controller");
    if (!ctrl) throw ConfigError("scenario: missing 'controller'");
    sc.controller = *ctrl;
    sc.load = parse_load(r.sub("load"), "load");
    sc.filter = !r.flag("filterless", false);
    sc.sim = parse_sim(r.sub("sim"));
    if (const Json* net = r.sub("network")) sc.network = parse_network(*net, sc.controller);
    r.finish();
    // instantiate once so invalid controller specs fail at parse time
    auto c = make_controller(sc.controller, sc.params);
    if (!sc.filter && c->needs_ac())
        throw ConfigError("filterless model requires a controller that only reads v_dc (matching)");
    return sc;
}

Json summarize_trace(const SimTrace& trace, const SimConfig& cfg, const Json& controller) {
    Json s;
    s["samples"] = trace.samples.size();
    if (trace.samples.empty()) return s;
    s["t_end_seconds"] = trace.samples.back().t;
    s["steady_state"] = steady_json(detect_steady_state(trace, cfg));
    s["passivity"] = passivity_json(trace);

    const auto& v = trace.samples;
    const std::size_t w = std::min<std::size_t>(
        v.size(), static_cast<std::size_t>(std::llround(cfg.steady_window / trace.dt_sample)) + 1);
    const std::size_t b = v.size() - w;
    s["final"] = {{"v_dc_volts", v.back().s.v_dc},
                  {"p_x_watts", mean_of(v, b, v.size(), &TraceSample::p_x)},
                  {"q_x_var", mean_of(v, b, v.size(), &TraceSample::q_x)},
                  {"p_load_watts", mean_of(v, b, v.size(), &TraceSample::p_load)},
                  {"q_load_var", mean_of(v, b, v.size(), &TraceSample::q_load)},
                  {"amp_vx_volts", mean_of(v, b, v.size(), &TraceSample::amp_vx)},
                  {"amp_v_volts", mean_of(v, b, v.size(), &TraceSample::amp_v)},
                  {"amp_il_amperes", mean_of(v, b, v.size(), &TraceSample::amp_il)},
                  {"omega_est_rad_per_second", mean_of(v, b, v.size(), &TraceSample::omega_est)}};
    s["flags"] = trace.flags;

    // droop line: mean (P, omega) at the end of every load segment
    const std::string type = controller.value("type", "");
    if (type == "droop" || type == "polar_voc") {
        const Json* dj = controller.contains("droop") ? &controller.at("droop") : nullptr;
        const DroopParams d = parse_droop(dj, "controller.droop");
        std::vector<std::size_t> ends;
        for (std::size_t k = 1; k < v.size(); ++k)
            if (!v[k].event.empty()) ends.push_back(k);
        ends.push_back(v.size());
        Json rows = Json::array();
        double worst = 0.0;
        std::size_t start = 0;
        for (std::size_t e : ends) {
            if (e >= start + w) {
                const double p = mean_of(v, e - w, e, &TraceSample::p_load);
                const double om = mean_of(v, e - w, e, &TraceSample::omega_est);
                const double target = droop_frequency(d, p);
                const double res = std::abs(om - target) / std::abs(target);
                worst = std::max(worst, res);
                rows.push_back({{"t_end_seconds", v[e - 1].t},
                                {"p_load_watts", p},
                                {"omega_rad_per_second", om},
                                {"omega_droop_rad_per_second", target},
                                {"relative_residual", res}});
            }
            start = e;
        }
        s["droop_line"] = {{"segments", rows}, {"max_relative_residual", worst}};
    }
    return s;
}

ScenarioResult run_scenario(const Scenario& sc) {
    ScenarioResult res;
    res.summary["name"] = sc.name;
    res.summary["controller"] = controller_type(sc.controller);
    if (sc.network) {
        res.is_network = true;
        const auto& ns = *sc.network;
        std::array<std::unique_ptr<Controller>, 2> ctrl{make_controller(ns.controllers[0], ns.params.conv[0]),
                                                        make_controller(ns.controllers[1], ns.params.conv[1])};
        NetworkSystem sys(ns.params, std::move(ctrl));
        try {
            sys.run(ns.init, sc.sim, res.net_trace);
        } catch (const DivergenceError& e) {
            res.diverged = true;
            res.diverged_at = e.last_valid_time;
        }
        res.summary["topology"] = topology_name(ns.params.topology);
        Json buses = Json::array();
        const auto& smp = res.net_trace.samples;
        const std::size_t w = std::min<std::size_t>(
            smp.size(), static_cast<std::size_t>(std::llround(sc.sim.steady_window / res.net_trace.dt_sample)) + 1);
        for (int k = 0; k < 2; ++k) {
            Json bj;
            try {
                const auto z = res.net_trace.column(k, &PlantState::v_ab);
                const AmpFreq af = estimate_amp_freq(z, res.net_trace.dt_sample, z.size() - w, z.size());
                bj = {{"amp_v_volts", af.amplitude},
                      {"omega_rad_per_second", af.omega},
                      {"frequency_hz", af.omega / (2.0 * kPi)},
                      {"v_dc_volts", smp.back().bus[k].s.v_dc}};
                SimTrace bus;
                bus.dt_sample = res.net_trace.dt_sample;
                for (const auto& ns : smp) bus.samples.push_back(ns.bus[k]);
                bj["passivity"] = passivity_json(bus);
            } catch (const std::exception& e) {
                bj = {{"error", e.what()}};
            }
            buses.push_back(bj);
        }
        res.summary["buses"] = buses;
        res.summary["flags"] = res.net_trace.flags;
    } else {
        ConverterSystem sys(sc.params, sc.load, make_controller(sc.controller, sc.params), sc.filter);
        try {
            sys.run(sc.init, sc.sim, res.trace);
        } catch (const DivergenceError& e) {
            res.diverged = true;
            res.diverged_at = e.last_valid_time;
        }
        const Json name = res.summary["name"], type = res.summary["controller"];
        res.summary = summarize_trace(res.trace, sc.sim, sc.controller);
        res.summary["name"] = name;
        res.summary["controller"] = type;
        res.summary["filterless"] = !sc.filter;
    }
    res.summary["diverged"] = res.diverged;
    if (res.diverged) res.summary["diverged_at_seconds"] = res.diverged_at;
    return res;
}

SweepSpec parse_sweep(const Json& j, const std::filesystem::path& base_dir) {
    Reader r(j, "sweep");
    SweepSpec s;
    const Json* tmpl = r.sub("scenario");
    const std::string file = r.str("scenario_file", "");
    if (tmpl && !file.empty()) throw ConfigError("sweep: give either 'scenario' or 'scenario_file'");
    if (tmpl)
        s.base = *tmpl;
    else if (!file.empty())
        s.base = load_json_file(base_dir / file);
    else
        throw ConfigError("sweep: missing 'scenario' or 'scenario_file'");
    s.parameter = r.str("parameter", "");
    const Json* vals = r.sub("values");
    r.finish();
    if (s.parameter.empty()) throw ConfigError("sweep: missing 'parameter'");
    if (!vals || !vals->is_array() || vals->empty()) throw ConfigError("sweep: 'values' must be a non-empty list");
    for (const auto& v : *vals) {
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            throw ConfigError("sweep: values must be finite numbers");
        s.values.push_back(v.get<double>());
    }
    Json::json_pointer ptr;
    try {
        ptr = Json::json_pointer(s.parameter);
    } catch (const Json::exception&) {
        throw ConfigError("sweep: malformed parameter path '" + s.parameter + "'");
    }
    if (!s.base.contains(ptr)) throw ConfigError("sweep: parameter path '" + s.parameter + "' does not resolve");
    parse_scenario(s.base);
    return s;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    std::vector<SweepRow> rows;
    const Json::json_pointer ptr(spec.parameter);
    for (double val : spec.values) {
        SweepRow row;
        row.value = val;
        try {
            Json j = spec.base;
            j[ptr] = val;
            const Scenario sc = parse_scenario(j);
            if (sc.network) throw ConfigError("sweeps run single-converter scenarios only");
            ConverterSystem sys(sc.params, sc.load, make_controller(sc.controller, sc.params), sc.filter);
            SimTrace tr;
            sys.run(sc.init, sc.sim, tr);
            const auto ss = detect_steady_state(tr, sc.sim);
            const auto& v = tr.samples;
            const std::size_t w = std::min<std::size_t>(
                v.size(), static_cast<std::size_t>(std::llround(sc.sim.steady_window / tr.dt_sample)) + 1);
            const std::size_t b = v.size() - w;
            row.p_x = mean_of(v, b, v.size(), &TraceSample::p_x);
            row.q_x = mean_of(v, b, v.size(), &TraceSample::q_x);
            row.p_load = mean_of(v, b, v.size(), &TraceSample::p_load);
            row.q_load = mean_of(v, b, v.size(), &TraceSample::q_load);
            if (ss) {
                row.converged = true;
                row.steady = *ss;
            } else {
                row.error = "no steady state";
            }
            const ConverterParams& p = sc.params;
            if (row.p_x <= max_power(p).p_max) {
                const SteadyStateProfile prof = steady_state_profile(p, row.p_x);
                row.v_dc_analytic = prof.v_dc_ss;
                row.vx_analytic = prof.vx_amp;
                row.omega_analytic = prof.omega;
            }
            const double il = ss ? ss->amp_il : v.back().amp_il;
            const double om = ss ? ss->omega : v.back().omega_est;
            const bool reactive_only = sc.load.schedule.back().g == 0.0;
            if (reactive_only && il > 0.0 && il <= max_current_amplitude(p)) {
                try {
                    row.b_over_analytic = reactive_characteristic_b(p, il, om, Branch::kOver);
                    row.b_under_analytic = reactive_characteristic_b(p, il, om, Branch::kUnder);
                } catch (const NumericError&) {
                }
            }
        } catch (const DivergenceError& e) {
            row.error = std::string("diverged at t=") + format_double(e.last_valid_time);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "value,converged,t_settle,v_dc,omega,amp_vx,amp_v,amp_il,P_x,Q_x,P_load,Q_load,"
          "v_dc_analytic,amp_vx_analytic,omega_analytic,b_over_analytic,b_under_analytic,error\n";
    for (const auto& r : rows) {
        const double cols[] = {r.steady.t_settle, r.steady.v_dc,   r.steady.omega,   r.steady.amp_vx,
                               r.steady.amp_v,    r.steady.amp_il, r.p_x,            r.q_x,
                               r.p_load,          r.q_load,        r.v_dc_analytic,  r.vx_analytic,
                               r.omega_analytic,  r.b_over_analytic, r.b_under_analytic};
        os << format_double(r.value) << ',' << (r.converged ? 1 : 0);
        for (double c : cols) os << ',' << (std::isnan(c) ? std::string() : format_double(c));
        std::string err = r.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        os << ',' << err << '\n';
    }
}

}  // namespace gfm
