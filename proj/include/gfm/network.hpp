#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gfm/closed_loop.hpp"

namespace gfm {

enum class Topology { kTree, kStar };

Topology parse_topology(const std::string& s);
std::string topology_name(Topology t);

struct StarLoadSegment {
    double t_start = 0.0;
    double r = 10.0;  // ohm
};

// Tree: bus 1 -- line -- bus 2, each bus with its own impedance load.
//   L_net di_net/dt = -R_net i_net + v_1 - v_2, bus 1 gives i_net, bus 2 receives it.
// Star: each bus feeds a line into a common resistive node,
//   L_net di_k/dt = -R_net i_k + v_k - v_load, v_load = R_load (i_1 + i_2).
// Line currents are positive away from bus 1 (tree) or toward the star point.
struct NetworkParams {
    Topology topology = Topology::kTree;
    double r_net = 0.5;
    double l_net = 5e-5;
    std::array<ConverterParams, 2> conv;
    std::array<LoadModel, 2> bus_loads;  // local loads; zero by default in the star
    std::vector<StarLoadSegment> star_load;

    void validate() const;
    std::size_t line_count() const { return topology == Topology::kTree ? 1 : 2; }
    double star_resistance(double t) const;
};

struct NetworkSample {
    double t = 0.0;
    std::array<TraceSample, 2> bus;
    std::array<Vec2, 2> i_net;  // second entry unused in the tree
    Vec2 v_load;                // star point voltage (zero in the tree)
    std::string event;
};

struct NetworkTrace {
    double dt_sample = 0.0;
    Topology topology = Topology::kTree;
    std::vector<NetworkSample> samples;
    std::vector<std::string> flags;

    std::vector<Vec2> column(int bus, Vec2 PlantState::*field) const;
};

class NetworkSystem : public OdeSystem {
public:
    NetworkSystem(NetworkParams np, std::array<std::unique_ptr<Controller>, 2> ctrl);

    std::size_t size() const override { return n_; }
    void deriv(double t, const double* x, double* dx) override;
    void begin_step(double t, double dt, const double* x) override;
    void after_step(double t, double dt, double* x) override;
    std::vector<double> event_times() const override;

    std::vector<double> initial_state(const std::array<PlantState, 2>& s0) const;
    NetworkSample sample(double t, const std::vector<double>& x) const;
    void run(const std::array<PlantState, 2>& s0, const SimConfig& cfg, NetworkTrace& out);

    const NetworkParams& params() const { return np_; }
    std::size_t offset(int bus) const { return off_[bus]; }
    std::size_t line_offset() const { return off_line_; }

private:
    struct Eval {
        std::array<Measurements, 2> meas;
        std::array<Actuation, 2> act;
        std::array<PlantState, 2> pd;
        std::array<Vec2, 2> i_net;
        std::array<Vec2, 2> di_net;
        Vec2 v_load;
    };
    Eval evaluate(double t, const double* x) const;

    NetworkParams np_;
    std::array<std::unique_ptr<Controller>, 2> ctrl_;
    std::array<std::size_t, 2> off_{};
    std::size_t off_line_ = 0;
    std::size_t off_sup_ = 0;  // per-bus supply integrals
    std::size_t n_ = 0;
    bool latched_ = false;
    double t_latch_ = 0.0;
};

struct NetworkBuild {
    std::unique_ptr<NetworkSystem> sys;
    std::vector<double> x0;
};

NetworkBuild build_network(const NetworkParams& np, std::array<std::unique_ptr<Controller>, 2> ctrl,
                           const std::array<PlantState, 2>& s0);

void write_network_csv(const NetworkTrace& trace, std::ostream& os);

}  // namespace gfm
