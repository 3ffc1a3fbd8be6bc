#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gfm/errors.hpp"
#include "gfm/sim.hpp"
#include "oracles.hpp"

using namespace gfm;

namespace {

struct Decay : OdeSystem {
    std::size_t size() const override { return 1; }
    void deriv(double, const double* x, double* dx) override { dx[0] = -x[0]; }
};

struct Rotation : OdeSystem {
    double w = 314.159;
    std::size_t size() const override { return 2; }
    void deriv(double, const double* x, double* dx) override {
        dx[0] = -w * x[1];
        dx[1] = w * x[0];
    }
};

struct Blowup : OdeSystem {
    std::size_t size() const override { return 1; }
    void deriv(double, const double* x, double* dx) override { dx[0] = x[0] * x[0]; }
};

struct Stepped : OdeSystem {
    double t_step = 0.25;
    std::size_t size() const override { return 1; }
    void deriv(double t, const double*, double* dx) override { dx[0] = t < t_step ? 0.0 : 1.0; }
    std::vector<double> event_times() const override { return {t_step}; }
};

double run_decay(double dt) {
    Decay d;
    std::vector<double> x{1.0};
    SimConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.record_every = 1;
    integrate(d, x, cfg, [](std::size_t, double, const std::vector<double>&, bool) {});
    return x[0];
}

void noop(std::size_t, double, const std::vector<double>&, bool) {}

SimTrace synthetic(double dt, std::size_t n, const std::function<double(double)>& vdc) {
    SimTrace tr;
    tr.dt_sample = dt;
    for (std::size_t k = 0; k < n; ++k) {
        TraceSample s;
        s.t = k * dt;
        s.s.v_dc = vdc(s.t);
        s.omega_est = 314.0;
        s.amp_v = s.amp_vx = s.amp_il = 1.0;
        tr.samples.push_back(s);
    }
    return tr;
}

}  // namespace

TEST_CASE("rk4 on the scalar decay") {
    CHECK(run_decay(1e-3) == doctest::Approx(oracle::exp_decay(1.0)).epsilon(1e-9));
    const double e1 = std::abs(run_decay(0.1) - oracle::exp_decay(1.0));
    const double e2 = std::abs(run_decay(0.05) - oracle::exp_decay(1.0));
    CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("rk4 conserves the norm of a rotation") {
    Rotation r;
    std::vector<double> x{1.0, 0.0};
    SimConfig cfg;
    cfg.dt = 1e-6;
    cfg.t_end = 1.0;
    cfg.record_every = 1000;
    double worst = 0.0;
    integrate(r, x, cfg, [&](std::size_t, double, const std::vector<double>& xs, bool) {
        worst = std::max(worst, std::abs(std::hypot(xs[0], xs[1]) - 1.0));
    });
    CHECK(worst < 1e-9);
}

TEST_CASE("events sit on the grid and are reported once") {
    Stepped s;
    std::vector<double> x{0.0};
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.record_every = 1;
    std::vector<std::size_t> flagged;
    double before = -1.0;
    integrate(s, x, cfg, [&](std::size_t k, double, const std::vector<double>& xs, bool ev) {
        if (ev) flagged.push_back(k);
        if (k == 249) before = xs[0];
    });
    CHECK(before == 0.0);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0] == 250);
    CHECK(std::abs(x[0] - 0.25) <= cfg.dt);

    s.t_step = 0.2505;
    x = {0.0};
    CHECK_THROWS_AS(integrate(s, x, cfg, noop), ConfigError);
}

TEST_CASE("divergence reports the last valid time") {
    Blowup b;
    std::vector<double> x{1.0};
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 3.0;
    double last = -1.0;
    try {
        integrate(b, x, cfg, [&](std::size_t, double t, const std::vector<double>&, bool) { last = t; });
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.last_valid_time > 0.9);
        CHECK(e.last_valid_time < 1.1);
        CHECK(last <= e.last_valid_time + 1e-12);
    }
}

TEST_CASE("integration is deterministic") {
    Rotation r;
    SimConfig cfg;
    cfg.dt = 1e-5;
    cfg.t_end = 0.1;
    std::vector<double> a{0.3, 0.7}, b{0.3, 0.7};
    integrate(r, a, cfg, noop);
    integrate(r, b, cfg, noop);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.record_every = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.t_end = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("amplitude and frequency estimator") {
    const double amp = 165.0 * std::sqrt(1.5), w = 314.159, dt = 1e-5;
    std::vector<Vec2> z;
    for (int k = 0; k < 4000; ++k) z.push_back({amp * std::cos(w * k * dt), amp * std::sin(w * k * dt)});
    const auto af = estimate_amp_freq(z, dt);
    CHECK(af.amplitude == doctest::Approx(202.07).epsilon(1e-3));
    CHECK(af.omega == doctest::Approx(w).epsilon(1e-3));

    std::vector<Vec2> c(10, Vec2{1.0, 2.0});
    CHECK(estimate_amp_freq(c, dt).omega == 0.0);

    std::vector<Vec2> zero(10, Vec2{0.0, 0.0});
    CHECK_THROWS_AS(estimate_amp_freq(zero, dt), NumericError);
    CHECK_THROWS_AS(estimate_amp_freq(c, dt, 0, 2), NumericError);
}

TEST_CASE("steady-state detection") {
    SimConfig cfg;
    cfg.steady_window = 0.1;
    cfg.steady_tol = 1e-6;
    const double dt = 1e-3;

    auto flat = synthetic(dt, 1000, [](double) { return 1000.0; });
    auto ss = detect_steady_state(flat, cfg);
    REQUIRE(ss);
    CHECK(ss->t_settle == 0.0);
    CHECK(ss->v_dc == doctest::Approx(1000.0));

    const double tau = 0.01;
    auto expo = synthetic(dt, 1000, [&](double t) { return 1.0 + std::exp(-t / tau); });
    ss = detect_steady_state(expo, cfg);
    REQUIRE(ss);
    CHECK(std::abs(ss->t_settle - tau * std::log(1.0 / cfg.steady_tol)) < cfg.steady_window);

    auto osc = synthetic(dt, 1000, [](double t) { return 1000.0 + std::sin(2.0 * oracle::kPi * 20.0 * t); });
    CHECK_FALSE(detect_steady_state(osc, cfg));
}

TEST_CASE("csv output") {
    SimTrace tr;
    tr.dt_sample = 0.1;
    TraceSample s;
    s.t = 0.1;
    s.s.v_dc = 1.0 / 3.0;
    s.event = "load_step";
    tr.samples.push_back(s);
    std::ostringstream os;
    write_csv(tr, os);
    const std::string out = os.str();
    CHECK(out.rfind("t,v_dc,i_alpha,i_beta,v_alpha,v_beta,m_alpha,m_beta,P_x,Q_x,P_load,Q_load,"
                    "amp_vx,amp_v,amp_il,omega_est,event",
                    0) == 0);
    CHECK(out.find("load_step") != std::string::npos);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_double(0.1) == "0.1");
}
