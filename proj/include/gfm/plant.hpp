#pragma once

#include <cstddef>
#include <vector>

#include "gfm/frames.hpp"

namespace gfm {

struct ConverterParams {
    double c_dc = 1e-3;  // F
    double g_dc = 0.1;   // S
    double i_dc = 100.0; // A, nominal source current
    double r = 0.1;      // ohm
    double l = 5e-4;     // H
    double c = 1e-5;     // F
    double eta = 0.3142; // rad/(V s)
    double mu = 0.33;

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct PlantState {
    double v_dc = 0.0;
    Vec2 i_ab;
    Vec2 v_ab;
    double i_gamma = 0.0;
    double v_gamma = 0.0;

    static constexpr std::size_t kSize = 7;
    void pack(double* x) const;
    static PlantState unpack(const double* x);
};

struct LoadSegment {
    double t_start = 0.0;
    double g = 0.0;  // S
    double b = 0.0;  // S
    Vec2 i_const;    // A, superposed constant current
};

// Piecewise-constant load schedule; segment k is active on [t_k, t_{k+1}).
struct LoadModel {
    std::vector<LoadSegment> schedule;

    static LoadModel constant(double g, double b);
    void validate() const;
    const LoadSegment& active(double t) const;
    std::vector<double> step_times() const;
};

// i_load = G_load v + i_const, G_load = [[g,-b],[b,g]].
Vec2 load_current(const LoadSegment& seg, const Vec2& v_ab);
Vec2 load_current(const LoadModel& load, double t, const Vec2& v_ab);

struct ModulationCommand {
    Vec2 m;
    bool saturated = false;
};

// Radially scales commands with norm above 1.
ModulationCommand clamp_modulation(const Vec2& m);

struct ModulationIO {
    double i_x = 0.0;
    Vec2 v_x;
};

// i_x = m.i/2, v_x = m v_dc/2.
ModulationIO modulation_io(const ModulationCommand& m, const PlantState& s);

PlantState plant_deriv(const ConverterParams& p, const PlantState& s, const Vec2& m,
                       double i_dc, const Vec2& i_load);

PlantState converter_deriv(const ConverterParams& p, const PlantState& s,
                           const ModulationCommand& m, const LoadModel& load, double t);

struct GammaDeriv {
    double di_gamma = 0.0;
    double dv_gamma = 0.0;
};

GammaDeriv gamma_deriv(const ConverterParams& p, double i_gamma, double v_gamma);

}  // namespace gfm
