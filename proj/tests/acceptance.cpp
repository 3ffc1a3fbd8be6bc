// Acceptance run: one PASS/FAIL line per criterion of the build contract.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfm/analysis.hpp"
#include "gfm/closed_loop.hpp"
#include "gfm/errors.hpp"
#include "gfm/scenario.hpp"

using namespace gfm;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Json bundled(const std::string& name) { return load_json_file(fs::path(GFM_SCENARIO_DIR) / name); }

ScenarioResult run(const Json& j) { return run_scenario(parse_scenario(j)); }

Json one_load(double g, double b) { return Json::array({{{"t_start_seconds", 0.0}, {"g_siemens", g}, {"b_siemens", b}}}); }

// Mean of a field over the samples with t in [t0, t1).
double mean_between(const SimTrace& tr, double t0, double t1, const std::function<double(const TraceSample&)>& f) {
    double s = 0.0;
    int n = 0;
    for (const auto& x : tr.samples)
        if (x.t >= t0 && x.t < t1) {
            s += f(x);
            ++n;
        }
    if (n == 0) throw NumericError("empty averaging window");
    return s / n;
}

double tail_mean(const SimTrace& tr, double w, const std::function<double(const TraceSample&)>& f) {
    const double te = tr.samples.back().t;
    return mean_between(tr, te - w, te + 1.0, f);
}

// Frequency of a rotating signal over the final window.
double tail_omega(const SimTrace& tr, double w, const std::function<Vec2(const TraceSample&)>& f) {
    std::vector<Vec2> z;
    z.reserve(tr.samples.size());
    for (const auto& s : tr.samples) z.push_back(f(s));
    const std::size_t n = std::min(z.size(), static_cast<std::size_t>(std::llround(w / tr.dt_sample)) + 1);
    return estimate_amp_freq(z, tr.dt_sample, z.size() - n, z.size()).omega;
}

Vec2 get_v(const TraceSample& s) { return s.s.v_ab; }
Vec2 get_i(const TraceSample& s) { return s.s.i_ab; }
Vec2 get_vx(const TraceSample& s) { return s.v_x; }

// Conductance whose equilibrium has the given DC voltage (v_dc falls with g).
double g_for_vdc(const ConverterParams& p, double v_target) {
    double lo = 1e-6, hi = 1e4;
    for (int k = 0; k < 100; ++k) {
        const double mid = std::sqrt(lo * hi);
        (dq_equilibrium(p, mid, 0.0).v_dc_s > v_target ? lo : hi) = mid;
    }
    if (hi > 1e3) throw NumericError("no resistive load reaches that DC voltage");
    return std::sqrt(lo * hi);
}

// Least-squares polynomial coefficients c0 + c1 x + ... (x shifted by x0).
Eigen::VectorXd polyfit(const std::vector<double>& x, const std::vector<double>& y, int deg, double x0) {
    Eigen::MatrixXd a(x.size(), deg + 1);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int d = 0; d <= deg; ++d) a(i, d) = std::pow(x[i] - x0, d);
        b(i) = y[i];
    }
    return a.colPivHouseholderQr().solve(b);
}

// ---- 1 -----------------------------------------------------------------------

Verdict open_circuit() {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioResult r = run(bundled("matching_open_circuit.json"));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double v = r.trace.samples.back().s.v_dc;
    const double f = tail_omega(r.trace, 0.02, get_v) / (2.0 * kPi);
    const double vx = tail_mean(r.trace, 0.02, [](const TraceSample& s) { return s.amp_vx; });
    const bool ok = !r.diverged && rel(v, 1000.0) <= 1e-3 && std::abs(f - 50.0) <= 0.05 &&
                    std::abs(vx - 165.0) <= 0.5 && secs < 10.0;
    return {ok, fmt("v_dc=%.3f V f=%.4f Hz |v_x|=%.3f V runtime=%.2f s", v, f, vx, secs)};
}

// ---- 2 -----------------------------------------------------------------------

Verdict droop_curves() {
    const ConverterParams p;
    Json base = bundled("matching_resistive_inductive.json");
    base["sim"]["t_end_seconds"] = 0.4;
    std::vector<double> px, vx, om;
    double worst_vx = 0.0, worst_om = 0.0;
    for (int k = 0; k <= 15; ++k) {
        const double target = 1600.0 * k;
        const double g = k == 0 ? 0.0 : g_for_vdc(p, steady_state_profile(p, target).v_dc_ss);
        base["load"] = one_load(g, 0.0);
        const ScenarioResult r = run(base);
        if (r.diverged) return {false, fmt("diverged at g=%g", g)};
        const double P = tail_mean(r.trace, 0.02, [](const TraceSample& s) { return s.p_x; });
        const double a = tail_mean(r.trace, 0.02, [](const TraceSample& s) { return s.amp_vx; });
        const double w = tail_omega(r.trace, 0.02, get_vx);
        const SteadyStateProfile th = steady_state_profile(p, std::max(P, 0.0));
        worst_vx = std::max(worst_vx, rel(a, th.vx_amp));
        worst_om = std::max(worst_om, rel(w, th.omega));
        px.push_back(P);
        vx.push_back(a);
        om.push_back(w);
    }
    // local slopes at the open-circuit point from quadratic fits of the simulated curves
    const double s_vx = polyfit(vx, px, 2, vx[0])(1);
    const double s_om = polyfit(om, px, 2, om[0])(1);
    const double want_vx = -606.06, want_om = -318.31;
    const bool ok = px.size() >= 15 && px.back() <= 24000.0 * 1.001 && px.back() > 23000.0 && worst_vx <= 1e-3 &&
                    worst_om <= 1e-3 && rel(s_vx, want_vx) <= 0.02 && rel(s_om, want_om) <= 0.02;
    return {ok, fmt("%zu points P_x in [%.1f, %.1f] W; max rel err |v_x| %.2e omega %.2e; "
                    "dP/d|v_x|=%.2f W/V (%.2f%%) dP/domega=%.2f W/(rad/s) (%.2f%%)",
                    px.size(), px.front(), px.back(), worst_vx, worst_om, s_vx, 100 * rel(s_vx, want_vx), s_om,
                    100 * rel(s_om, want_om))};
}

// ---- 3 -----------------------------------------------------------------------

Verdict max_power_bound() {
    const ConverterParams p;
    Json base = bundled("matching_resistive_inductive.json");
    base["sim"]["t_end_seconds"] = 0.3;
    std::vector<double> vs, ps;
    double pmax = 0.0, v_at = 0.0;
    // grid in DC voltage; P_x is flat near its peak, so the grid has to be fine there
    for (double vt : {900.0, 700.0, 600.0, 550.0, 520.0, 510.0, 505.0, 500.0, 495.0, 490.0, 480.0, 450.0, 400.0}) {
        const double g = g_for_vdc(p, vt);
        base["load"] = one_load(g, 0.0);
        const ScenarioResult r = run(base);
        if (r.diverged) return {false, fmt("diverged at g=%g", g)};
        const double P = tail_mean(r.trace, 0.02, [](const TraceSample& s) { return s.p_x; });
        const double v = r.trace.samples.back().s.v_dc;
        if (P > pmax) {
            pmax = P;
            v_at = v;
        }
        if (std::abs(vt - 500.0) <= 100.0) {
            vs.push_back(v);
            ps.push_back(P);
        }
    }
    const Eigen::VectorXd c = polyfit(vs, ps, 2, 500.0);
    const double v_vertex = 500.0 - c(1) / (2.0 * c(2));
    bool throws = false;
    try {
        steady_state_profile(p, 25001.0);
    } catch (const NumericError&) {
        throws = true;
    }
    const bool ok = pmax <= 25000.0 * 1.005 && rel(v_at, 500.0) <= 0.01 && rel(v_vertex, 500.0) <= 0.01 && throws;
    return {ok, fmt("max simulated P_x=%.1f W at v_dc=%.2f V; fitted peak at v_dc=%.2f V; "
                    "no profile for 25001 W: %s",
                    pmax, v_at, v_vertex, throws ? "yes" : "no")};
}

// ---- 4 -----------------------------------------------------------------------

Verdict reactive_invariance() {
    Json base = bundled("matching_open_circuit.json");
    base["initial"]["v_dc_volts"] = 1000.0;
    base["sim"]["t_end_seconds"] = 0.3;
    auto measure = [&](double b) {
        base["load"] = one_load(0.0, b);
        const ScenarioResult r = run(base);
        return std::pair{tail_omega(r.trace, 0.02, get_vx),
                         tail_mean(r.trace, 0.02, [](const TraceSample& s) { return s.amp_vx; })};
    };
    const auto [w0, a0] = measure(0.0);
    double worst = 0.0;
    std::string d;
    for (double b : {-0.01, -0.001, 0.001, 0.01}) {
        const auto [w, a] = measure(b);
        worst = std::max({worst, rel(w, w0), rel(a, a0)});
        d += fmt(" b=%g: d_omega %.1e d_vx %.1e;", b, rel(w, w0), rel(a, a0));
    }
    return {worst < 2e-3, fmt("max relative change %.2e;%s", worst, d.c_str())};
}

// ---- 5 and 7 share the bundled runs --------------------------------------------

struct BundledRuns {
    double worst_ratio = 0.0;
    std::string worst_name;
    int count = 0;
    SimTrace sync_trace;
    std::vector<std::pair<std::string, std::array<double, 2>>> bus_omega;
};

BundledRuns run_bundled() {
    BundledRuns out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(GFM_SCENARIO_DIR))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    auto audit = [&](const SimTrace& tr, const std::string& name) {
        const PassivityReport pr = passivity_audit(tr);
        const double ratio = pr.max_violation / pr.peak_storage;
        if (ratio >= out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_name = name;
        }
        ++out.count;
    };
    for (const auto& f : files) {
        const Json j = load_json_file(f);
        if (j.contains("parameter")) continue;  // sweeps reuse the scenarios below
        ScenarioResult r = run(j);
        const std::string name = f.stem().string();
        if (r.is_network) {
            std::array<double, 2> w{};
            for (int k = 0; k < 2; ++k) {
                SimTrace bus;
                bus.dt_sample = r.net_trace.dt_sample;
                for (const auto& s : r.net_trace.samples) bus.samples.push_back(s.bus[k]);
                audit(bus, name + "/bus" + std::to_string(k + 1));
                w[k] = tail_omega(bus, 0.02, get_v);
            }
            out.bus_omega.push_back({name, w});
        } else {
            audit(r.trace, name);
            if (name == "matching_resistive_inductive") out.sync_trace = std::move(r.trace);
        }
    }
    return out;
}

Verdict passivity(const BundledRuns& b) {
    return {b.count >= 12 && b.worst_ratio <= 1e-6,
            fmt("%d traces audited; worst violation/peak storage %.2e (%s)", b.count, b.worst_ratio,
                b.worst_name.c_str())};
}

Verdict synchronization(const BundledRuns& b) {
    if (b.sync_trace.samples.empty() || b.bus_omega.size() != 2) return {false, "missing runs"};
    const double wv = tail_omega(b.sync_trace, 0.02, get_v);
    const double wi = tail_omega(b.sync_trace, 0.02, get_i);
    const double wx = tail_omega(b.sync_trace, 0.02, get_vx);
    double worst = std::max(rel(wi, wv), rel(wx, wv));
    std::string d = fmt("single: v %.5f i %.5f v_x %.5f rad/s;", wv, wi, wx);
    for (const auto& [name, w] : b.bus_omega) {
        worst = std::max(worst, rel(w[1], w[0]));
        d += fmt(" %s: %.5f / %.5f rad/s;", name.c_str(), w[0], w[1]);
    }
    return {worst <= 1e-4, fmt("max relative spread %.2e; %s", worst, d.c_str())};
}

// ---- 6 -----------------------------------------------------------------------

Verdict oscillator_invariants() {
    const ConverterParams p;
    ConverterSystem sys(p, LoadModel::constant(0.3, 0.001), std::make_unique<MatchingController>(p, MatchingConfig{}));
    PlantState s0;
    s0.v_dc = 1000.0;
    std::vector<double> x = sys.initial_state(s0);
    SimConfig cfg;
    cfg.dt = 1e-6;
    cfg.t_end = 1.0;
    cfg.record_every = 1;
    double drift = 0.0, m_err = 0.0;
    std::size_t steps = 0;
    integrate(sys, x, cfg, [&](std::size_t k, double t, const std::vector<double>& xs, bool) {
        drift = std::max(drift, std::abs(std::hypot(xs[PlantState::kSize], xs[PlantState::kSize + 1]) - 1.0));
        m_err = std::max(m_err, std::abs(norm(sys.sample(t, xs).m) - p.mu));
        steps = k;
    });
    // "exactly" up to the rounding of one hypot and one product
    const bool ok = steps >= 1000000 && drift <= 1e-9 && m_err <= 4.0 * p.mu * 2.2e-16;
    return {ok, fmt("%zu steps; max | |xi| - 1 | = %.2e; max | |m| - mu | = %.2e", steps, drift, m_err)};
}

// ---- 8 -----------------------------------------------------------------------

Verdict equilibrium_and_lyapunov() {
    const ConverterParams p;
    std::mt19937 rng(20240611);
    std::uniform_real_distribution<double> ug(0.05, 1.5), ub(-0.002, 0.002);
    Json base = bundled("matching_resistive_inductive.json");
    base["sim"]["t_end_seconds"] = 0.5;
    double worst = 0.0, worst_w = 0.0;
    int held = 0;
    for (int k = 0; k < 10; ++k) {
        const double g = ug(rng), b = ub(rng);
        base["load"] = one_load(g, b);
        const ScenarioResult r = run(base);
        if (r.diverged) return {false, fmt("diverged at g=%g b=%g", g, b)};
        const DqEquilibrium eq = dq_equilibrium(p, g, b);
        const SimTrace& tr = r.trace;
        const double v = tr.samples.back().s.v_dc;
        const double w = tail_omega(tr, 0.02, get_v);
        const double av = tail_mean(tr, 0.02, [](const TraceSample& s) { return s.amp_v; });
        const double ai = tail_mean(tr, 0.02, [](const TraceSample& s) { return s.amp_il; });
        worst = std::max({worst, rel(v, eq.v_dc_s), rel(w, eq.omega_s), rel(av, norm(eq.v_dq_s)),
                          rel(ai, norm(eq.i_dq_s))});
        if (!lyapunov_condition(p, eq, g).holds) continue;
        ++held;
        double peak = 0.0, prev = INFINITY, rise = 0.0;
        for (const auto& s : tr.samples) {
            const double wt = w_tilde(p, eq, s.s, s.theta);
            peak = std::max(peak, wt);
            if (s.t >= 0.01) rise = std::max(rise, (wt - prev) / peak);
            prev = wt;
        }
        worst_w = std::max(worst_w, rise);
    }
    const bool ok = worst <= 1e-3 && held > 0 && worst_w <= 1e-9;
    return {ok, fmt("10 loads: max relative deviation %.2e; condition held for %d, max W~ rise %.1e of peak", worst,
                    held, worst_w)};
}

// ---- 9 -----------------------------------------------------------------------

// AC filter alone, driven by an exactly rotating v_x.
struct DrivenFilter : OdeSystem {
    ConverterParams p;
    double g = 0.3, b = 0.0, w = 314.16, amp = 165.0;
    std::size_t size() const override { return 4; }
    void deriv(double t, const double* x, double* dx) override {
        PlantState s;
        s.v_dc = 2.0 * amp / p.mu;
        s.i_ab = {x[0], x[1]};
        s.v_ab = {x[2], x[3]};
        const Vec2 m = p.mu * polar_unit(w * t);
        const PlantState d = plant_deriv(p, s, m, p.i_dc, load_current(LoadSegment{0.0, g, b, {}}, s.v_ab));
        dx[0] = d.i_ab.a;
        dx[1] = d.i_ab.b;
        dx[2] = d.v_ab.a;
        dx[3] = d.v_ab.b;
    }
};

Verdict internal_model() {
    double worst_res = 0.0, worst_rate = 0.0;
    std::string d;
    for (auto [g, b] : {std::pair{0.3, 0.0}, std::pair{1.0, 0.01}, std::pair{0.1, -0.001}}) {
        DrivenFilter sys;
        sys.g = g;
        sys.b = b;
        const InternalModel im = internal_model_manifold(sys.p, g, b, sys.w);
        worst_res = std::max(worst_res, im.sylvester_residual);
        std::vector<double> x(4, 0.0), ts, ls;
        SimConfig cfg;
        cfg.dt = 1e-7;
        cfg.t_end = 1e-3;
        cfg.record_every = 10;
        integrate(sys, x, cfg, [&](std::size_t, double t, const std::vector<double>& xs, bool) {
            if (t < 3e-4) return;
            const Eigen::Vector2d u = Eigen::Vector2d(-std::sin(sys.w * t), std::cos(sys.w * t)) * sys.amp;
            const Eigen::Vector4d xe(xs[0], xs[1], xs[2], xs[3]);
            ts.push_back(t);
            ls.push_back(std::log((xe - im.f * u).norm()));
        });
        const double slope = polyfit(ts, ls, 1, ts.front())(1);
        worst_rate = std::max(worst_rate, rel(slope, im.spectral_abscissa));
        d += fmt(" g=%g b=%g: residual %.1e, rate %.1f vs %.1f 1/s;", g, b, im.sylvester_residual, slope,
                 im.spectral_abscissa);
    }
    return {worst_res <= 1e-9 && worst_rate <= 0.1, fmt("max rate mismatch %.2f%%;%s", 100 * worst_rate, d.c_str())};
}

// ---- 10 ----------------------------------------------------------------------

Verdict outer_loops() {
    // (a) current amplitude tracking at the end of each load segment
    const ScenarioResult ra = run(bundled("matching_amplitude_tracking.json"));
    double worst_a = 0.0;
    std::string da;
    for (double te : {0.3, 0.6, 1.0}) {
        const double il = mean_between(ra.trace, te - 0.02, te, [](const TraceSample& s) { return s.amp_il; });
        worst_a = std::max(worst_a, rel(il, 20.0));
        da += fmt(" %.3f", il);
    }
    const bool ok_a = !ra.diverged && worst_a <= 0.01;

    // (b) DC-current PID: frequency band through the load steps
    const ScenarioResult rb = run(bundled("matching_dc_current_pid.json"));
    double dev_b = 0.0, dev_est = 0.0;
    for (const auto& s : rb.trace.samples) dev_b = std::max(dev_b, std::abs(s.eta * s.s.v_dc / (2.0 * kPi) - 50.0));
    // capacitor voltage frequency over 20 ms windows, once the unloaded LC ringing has decayed
    {
        std::vector<Vec2> z;
        for (const auto& s : rb.trace.samples) z.push_back(s.s.v_ab);
        const std::size_t w = static_cast<std::size_t>(std::llround(0.02 / rb.trace.dt_sample));
        for (std::size_t b = rb.trace.index_at(0.1); b + w <= z.size(); b += w / 2)
            dev_est = std::max(dev_est, std::abs(estimate_amp_freq(z, rb.trace.dt_sample, b, b + w).omega / (2.0 * kPi) - 50.0));
    }
    const bool ok_b = !rb.diverged && dev_b <= 0.2 && dev_est <= 0.2;

    // (c) sampled eta law: residual of the realised frequency dynamics, and tau comparison
    const Json ft = bundled("matching_frequency_tracking.json");
    const double tau = ft["controller"]["eta"]["tau_per_second"], w_ref = ft["controller"]["eta"]["omega_ref_rad_per_second"];
    auto residual = [&](double dt) {
        Json j = ft;
        j["load"] = Json::array({{{"t_start_seconds", 0.0}, {"g_siemens", 0.0}},
                                 {{"t_start_seconds", 0.01}, {"g_siemens", 0.3}}});
        j["sim"]["dt_seconds"] = dt;
        j["sim"]["t_end_seconds"] = 0.03;
        j["sim"]["record_every"] = 1;
        const SimTrace tr = run(j).trace;
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < tr.samples.size(); ++k) {
            if (!tr.samples[k].event.empty() || !tr.samples[k + 1].event.empty()) continue;
            const double w0 = tr.samples[k].eta * tr.samples[k].s.v_dc;
            const double w1 = tr.samples[k + 1].eta * tr.samples[k + 1].s.v_dc;
            worst = std::max(worst, std::abs((w1 - w0) / dt - tau * (w_ref - w0)));
        }
        return worst;
    };
    const double r1 = residual(1e-6), r2 = residual(2e-6);
    auto peak_dev = [&](double t) {
        Json j = ft;
        j["controller"]["eta"]["tau_per_second"] = t;
        j["sim"]["t_end_seconds"] = 0.7;
        double pk = 0.0;
        for (const auto& s : run(j).trace.samples)
            if (s.t >= 0.3) pk = std::max(pk, std::abs(s.eta * s.s.v_dc - w_ref));
        return pk;
    };
    const double pk100 = peak_dev(100.0), pk2000 = peak_dev(2000.0);
    const bool ok_c = r2 / r1 > 1.6 && r2 / r1 < 2.4 && pk2000 < pk100;

    return {ok_a && ok_b && ok_c,
            fmt("(a) %s |i| at segment ends:%s A; (b) %s max |f-50| %.4f Hz (eta v_dc), %.4f Hz (v windows, t>=0.1 s); "
                "(c) %s residual %.3e / %.3e rad/s^2 at dt / 2dt (ratio %.2f), peak deviation tau=100: %.3e, "
                "tau=2000: %.3e rad/s",
                ok_a ? "ok" : "FAIL", da.c_str(), ok_b ? "ok" : "FAIL", dev_b, dev_est, ok_c ? "ok" : "FAIL", r1, r2,
                r2 / r1, pk100, pk2000)};
}

// ---- 11 ----------------------------------------------------------------------

Verdict reactive_shaping() {
    const ConverterParams p;
    const Json rs = bundled("matching_reactive_shaping.json");
    const double k = rs["controller"]["reactive"]["gain"], mu0 = rs["controller"]["reactive"]["base"];
    const double slope_want = k * p.i_dc / (2.0 * p.g_dc);

    // full plant: |v_x| against Q_x
    std::vector<double> qs, as;
    for (double b : {-0.06, -0.04, -0.02, 0.0, 0.005}) {
        Json j = rs;
        j["load"] = one_load(0.0, b);
        j["sim"]["t_end_seconds"] = 0.6;
        const ScenarioResult r = run(j);
        if (r.diverged) return {false, fmt("diverged at b=%g", b)};
        qs.push_back(tail_mean(r.trace, 0.05, [](const TraceSample& s) { return s.q_x; }));
        as.push_back(tail_mean(r.trace, 0.05, [](const TraceSample& s) { return s.amp_vx; }));
    }
    const double slope = polyfit(qs, as, 1, 0.0)(1);
    const bool ok_slope = rel(slope, slope_want) <= 0.02;

    // filterless model: feasibility of the inductive side, found by bisection on b
    auto filterless = [&](double b, double dt, double t_end) {
        Json j = rs;
        j["filterless"] = true;
        j["load"] = one_load(0.0, b);
        j["sim"]["dt_seconds"] = dt;
        j["sim"]["t_end_seconds"] = t_end;
        j["sim"]["record_every"] = static_cast<int>(std::lround(1e-3 / dt));
        return run(j);
    };
    enum class Outcome { kSteady, kClamped, kUndecided };
    double q_feasible = 0.0;
    auto classify = [&](double b) {
        const ScenarioResult r = filterless(b, 1e-5, 15.0);
        const auto& v = r.trace.samples;
        if (r.diverged) return Outcome::kClamped;
        for (const auto& s : v)
            if (s.mu >= 1.0) return Outcome::kClamped;
        const double mu_end = v.back().mu, mu_prev = v[r.trace.index_at(v.back().t - 1.0)].mu;
        if (std::abs(mu_end - mu_prev) > 1e-5) return Outcome::kUndecided;
        q_feasible = tail_mean(r.trace, 0.05, [](const TraceSample& s) { return s.q_x; });
        return Outcome::kSteady;
    };
    double lo = -0.06, hi = -0.15;  // feasible, infeasible
    bool bracket = classify(lo) == Outcome::kSteady;
    const double q_lo0 = q_feasible;
    bracket = bracket && classify(hi) == Outcome::kClamped;
    q_feasible = q_lo0;
    double q_edge = q_lo0;
    while (bracket && std::abs(hi - lo) > 1e-4 * std::abs(lo)) {
        const double mid = 0.5 * (lo + hi);
        const Outcome o = classify(mid);
        if (o == Outcome::kUndecided) break;
        if (o == Outcome::kSteady) {
            lo = mid;
            q_edge = q_feasible;
        } else {
            hi = mid;
        }
    }
    const double q_max = mu0 / k;
    const bool ok_fold = bracket && rel(q_edge, q_max) <= 0.05;

    // capacitive side: Q_x approaches -mu0/k from above
    double q_min = INFINITY, q_last = 0.0;
    for (double b : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
        const ScenarioResult r = filterless(b, 1e-6, 0.3);
        if (r.diverged) return {false, fmt("filterless run diverged at b=%g", b)};
        q_last = tail_mean(r.trace, 0.05, [](const TraceSample& s) { return s.q_x; });
        q_min = std::min(q_min, q_last);
    }
    const bool ok_cap = q_min >= -q_max * (1.0 + 1e-6) && rel(q_last, -q_max) <= 0.05;

    return {ok_slope && ok_fold && ok_cap,
            fmt("slope d|v_x|/dQ_x=%.6f V/var vs %.6f (%.2f%%); inductive edge b in [%.5f, %.5f] S with "
                "Q_x=%.1f var (%.2f%% from %.0f); capacitive: min steady Q_x=%.1f var, at b=1000 S %.1f var (%.2f%%)",
                slope, slope_want, 100 * rel(slope, slope_want), hi, lo, q_edge, 100 * rel(q_edge, q_max), q_max,
                q_min, q_last, 100 * rel(q_last, -q_max))};
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    int failed = 0;
    auto report = [&](int n, const char* title, const std::function<Verdict()>& f) {
        const auto t1 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
        std::printf("criterion %2d %s: %s (%.1f s) %s\n", n, title, v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    };
    report(1, "open-circuit nominal point", open_circuit);
    report(2, "droop curves", droop_curves);
    report(3, "maximal power", max_power_bound);
    report(4, "reactive invariance", reactive_invariance);
    BundledRuns bundled_runs;
    report(5, "passivity audits", [&] {
        bundled_runs = run_bundled();
        return passivity(bundled_runs);
    });
    report(6, "oscillator invariants", oscillator_invariants);
    report(7, "synchronization", [&] { return synchronization(bundled_runs); });
    report(8, "dq equilibrium and Lyapunov", equilibrium_and_lyapunov);
    report(9, "internal model", internal_model);
    report(10, "outer loops", outer_loops);
    report(11, "reactive shaping", reactive_shaping);
    std::printf("%d of 11 criteria passed in %.1f s\n", 11 - failed,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return failed == 0 ? 0 : 1;
}
