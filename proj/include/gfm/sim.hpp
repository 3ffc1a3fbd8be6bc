#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"

namespace gfm {

struct SimConfig {
    double dt = 1e-6;
    double t_end = 1.0;
    int record_every = 10;
    double steady_tol = 1e-4;
    double steady_window = 0.05;

    void validate() const;
    std::size_t steps() const;
};

// State-space model integrated by the fixed-step RK4 scheme.
class OdeSystem {
public:
    virtual ~OdeSystem() = default;
    virtual std::size_t size() const = 0;
    virtual void deriv(double t, const double* x, double* dx) = 0;
    // Called before the stages of each step; lets systems latch piecewise inputs.
    virtual void begin_step(double /*t*/, double /*dt*/, const double* /*x*/) {}
    // Called after each completed step (renormalisation, sampled controllers).
    virtual void after_step(double /*t*/, double /*dt*/, double* /*x*/) {}
    virtual std::vector<double> event_times() const { return {}; }
};

// Classical RK4 with preallocated stage buffers.
class Rk4 {
public:
    explicit Rk4(std::size_t n);
    void step(OdeSystem& sys, double t, double dt, std::vector<double>& x);

private:
    std::vector<double> k1_, k2_, k3_, k4_, w_;
};

// Called for every recorded sample; `event` is true when a scheduled event
// occurred since the previous recorded sample.
using Observer = std::function<void(std::size_t step, double t, const std::vector<double>& x, bool event)>;

// Integrates from t=0 to cfg.t_end. Events must fall on the dt grid.
// Throws DivergenceError on a non-finite state (samples up to then are kept).
void integrate(OdeSystem& sys, std::vector<double>& x, const SimConfig& cfg, const Observer& obs);

struct TraceSample {
    double t = 0.0;
    PlantState s;
    Vec2 m;
    Vec2 i_load;   // current leaving the capacitor node (load plus line)
    Vec2 v_x;
    double i_dc = 0.0;
    double p_x = 0.0, q_x = 0.0, p_load = 0.0, q_load = 0.0;
    double amp_vx = 0.0, amp_v = 0.0, amp_il = 0.0;
    double omega_est = 0.0;
    double supply_int = 0.0;  // integral of i_dc v_dc - i_load.v_ab
    double storage = 0.0;     // S of the simulated circuit
    double mu = 0.0, eta = 0.0;
    double theta = 0.0;       // controller angle when defined
    bool saturated = false;
    std::string event;
};

struct SimTrace {
    double dt_sample = 0.0;
    std::vector<TraceSample> samples;
    std::vector<std::string> flags;

    std::vector<Vec2> column(Vec2 TraceSample::*field) const;
    std::vector<double> column(double TraceSample::*field) const;
    // Index of the first sample with t >= time.
    std::size_t index_at(double time) const;
};

struct AmpFreq {
    double amplitude = 0.0;
    double omega = 0.0;
};

// Mean norm and mean cross-product frequency with central differences.
AmpFreq estimate_amp_freq(const std::vector<Vec2>& z, double dt);
AmpFreq estimate_amp_freq(const std::vector<Vec2>& z, double dt, std::size_t begin, std::size_t end);

struct SteadyState {
    double t_settle = 0.0;
    double v_dc = 0.0;
    double omega = 0.0;
    double amp_v = 0.0;
    double amp_vx = 0.0;
    double amp_il = 0.0;
};

// First time from which every window of cfg.steady_window keeps v_dc,
// omega_est and the amplitudes within cfg.steady_tol relative variation.
std::optional<SteadyState> detect_steady_state(const SimTrace& trace, const SimConfig& cfg);

// Generic form on parallel signals sampled every dt.
std::optional<double> settle_time(const std::vector<std::vector<double>>& signals, double dt,
                                  double window, double tol);

extern const char* const kCsvHeader;
void write_csv(const SimTrace& trace, std::ostream& os);
std::string format_double(double v);

}  // namespace gfm
