#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gfm/analysis.hpp"
#include "gfm/classic_ctrl.hpp"
#include "gfm/matching_ctrl.hpp"
#include "gfm/outer_ctrl.hpp"
#include "gfm/plant.hpp"
#include "gfm/sim.hpp"

namespace gfm {

struct Measurements {
    double t = 0.0;
    PlantState s;
    Vec2 i_load;
};

struct Actuation {
    Vec2 m;  // after clamping
    double i_dc = 0.0;
    double mu = 0.0;
    double eta = 0.0;
    double theta = 0.0;
    bool saturated = false;
    bool undefined = false;  // controller not defined at this state, m forced to 0
    bool limited = false;    // an outer-loop output was clamped or held
};

// Controller with continuous states integrated together with the plant.
class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string name() const = 0;
    virtual std::size_t size() const = 0;
    virtual void init(const PlantState& s0, double* xc) const = 0;
    // Must only read v_dc from the plant when needs_ac() is false.
    virtual Actuation actuate(const Measurements& m, const double* xc) const = 0;
    virtual void deriv(const Measurements& m, const double* xc, const Actuation& a,
                       const PlantState& plant_dot, double* dxc) const = 0;
    // Sampled-data updates: computed from the state at the start of a step,
    // applied once the step is complete.
    virtual void begin_step(const Measurements&, const double*, const Actuation&, const PlantState&,
                            double /*dt*/) {}
    virtual void after_step(double* /*xc*/) {}
    virtual bool needs_ac() const { return true; }
};

// ---- inner loop with a selectable voltage reference ------------------------

enum class RefSource { kSinusoid, kDroop, kPolarVoc, kVdpVoc };

struct InnerLoopConfig {
    InnerLoopGains gains;
    RefSource source = RefSource::kSinusoid;
    double amp = 165.0;  // phase amplitude of the sinusoid / VdP reference
    double omega = 2.0 * 3.14159265358979323846 * 50.0;
    DroopParams droop;
    PolarVocParams polar;
    VdpVocParams vdp;
    VdpVocState vdp_init;
    double theta0 = 0.0;
    double v_hat0 = 165.0;  // initial polar VOC amplitude
};

class InnerLoopController : public Controller {
public:
    InnerLoopController(const ConverterParams& p, const InnerLoopConfig& cfg);
    std::string name() const override;
    std::size_t size() const override;
    void init(const PlantState& s0, double* xc) const override;
    Actuation actuate(const Measurements& m, const double* xc) const override;
    void deriv(const Measurements& m, const double* xc, const Actuation& a, const PlantState& pd,
               double* dxc) const override;

    Vec2 reference(const Measurements& m, const double* xc) const;

private:
    ConverterParams p_;
    InnerLoopConfig cfg_;
};

// ---- open-loop polar modulation -------------------------------------------

class OpenLoopController : public Controller {
public:
    OpenLoopController(const ConverterParams& p, const OpenLoopParams& cfg, double vm0 = 0.0,
                       double theta0 = 0.0);
    std::string name() const override { return "open_loop"; }
    std::size_t size() const override { return 2; }
    void init(const PlantState& s0, double* xc) const override;
    Actuation actuate(const Measurements& m, const double* xc) const override;
    void deriv(const Measurements& m, const double* xc, const Actuation& a, const PlantState& pd,
               double* dxc) const override;

private:
    ConverterParams p_;
    OpenLoopParams cfg_;
    double vm0_, theta0_;
};

// ---- matching control with optional outer loops ----------------------------

enum class MuSource { kConstant, kAmpTrack, kReactive };
enum class EtaSource { kConstant, kTrack, kReactive };
enum class IdcSource { kConstant, kPid, kReactive };

struct MatchingConfig {
    double theta0 = 0.0;
    MuSource mu_source = MuSource::kConstant;
    EtaSource eta_source = EtaSource::kConstant;
    IdcSource idc_source = IdcSource::kConstant;
    AmpTrackParams amp;
    double mu0 = 0.33;  // initial mu for amplitude tracking
    EtaTrackParams eta_track;
    double eta0 = 0.3142;
    IdcPidParams pid;
    double v_dc_ref = 1000.0;
    ReactiveShapeParams reactive;
    void validate() const;
};

class MatchingController : public Controller {
public:
    MatchingController(const ConverterParams& p, const MatchingConfig& cfg);
    std::string name() const override { return "matching"; }
    std::size_t size() const override { return n_; }
    void init(const PlantState& s0, double* xc) const override;
    Actuation actuate(const Measurements& m, const double* xc) const override;
    void deriv(const Measurements& m, const double* xc, const Actuation& a, const PlantState& pd,
               double* dxc) const override;
    void begin_step(const Measurements& m, const double* xc, const Actuation& a, const PlantState& pd,
                    double dt) override;
    void after_step(double* xc) override;
    bool needs_ac() const override { return false; }

    const MatchingConfig& config() const { return cfg_; }

private:
    ConverterParams p_;
    MatchingConfig cfg_;
    std::size_t n_ = 2;
    int i_mu_ = -1, i_el_ = -1, i_ec_ = -1, i_q_ = -1, i_pid_ = -1, i_eta_ = -1;
    std::optional<double> pending_eta_;
};

// ---- single converter closed loop -----------------------------------------

class ConverterSystem : public OdeSystem {
public:
    // filter=false drops the RLC filter: the load is fed directly by v_x.
    ConverterSystem(const ConverterParams& p, LoadModel load, std::unique_ptr<Controller> ctrl,
                    bool filter = true);

    std::size_t size() const override { return PlantState::kSize + ctrl_->size() + 1; }
    void deriv(double t, const double* x, double* dx) override;
    void begin_step(double t, double dt, const double* x) override;
    void after_step(double t, double dt, double* x) override;
    std::vector<double> event_times() const override { return load_.step_times(); }

    std::vector<double> initial_state(const PlantState& s0) const;
    TraceSample sample(double t, const std::vector<double>& x) const;
    // Runs from s0; on divergence `out` keeps the samples so far and the error propagates.
    void run(const PlantState& s0, const SimConfig& cfg, SimTrace& out);
    SimTrace run(const PlantState& s0, const SimConfig& cfg);

    const ConverterParams& params() const { return p_; }
    const LoadModel& load() const { return load_; }
    Controller& controller() { return *ctrl_; }
    bool has_filter() const { return filter_; }

private:
    struct Eval {
        Measurements meas;
        Actuation act;
        PlantState pd;
    };
    Eval evaluate(double t, const double* x, const LoadSegment& seg) const;

    ConverterParams p_;
    LoadModel load_;
    std::unique_ptr<Controller> ctrl_;
    bool filter_;
    const LoadSegment* seg_ = nullptr;
};

}  // namespace gfm
