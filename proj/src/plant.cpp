#include "gfm/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfm/errors.hpp"

namespace gfm {

void ConverterParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string(name) + " must be positive and finite");
    };
    positive(c_dc, "c_dc");
    positive(g_dc, "g_dc");
    positive(r, "r");
    positive(l, "l");
    positive(c, "c");
    positive(eta, "eta");
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0, 1]");
    if (!(i_dc >= 0.0) || !std::isfinite(i_dc)) throw ConfigError("i_dc must be >= 0");
}

void PlantState::pack(double* x) const {
    x[0] = v_dc;
    x[1] = i_ab.a;
    x[2] = i_ab.b;
    x[3] = v_ab.a;
    x[4] = v_ab.b;
    x[5] = i_gamma;
    x[6] = v_gamma;
}

PlantState PlantState::unpack(const double* x) {
    PlantState s;
    s.v_dc = x[0];
    s.i_ab = {x[1], x[2]};
    s.v_ab = {x[3], x[4]};
    s.i_gamma = x[5];
    s.v_gamma = x[6];
    return s;
}

LoadModel LoadModel::constant(double g, double b) {
    LoadModel m;
    m.schedule.push_back({0.0, g, b, {}});
    return m;
}

void LoadModel::validate() const {
    if (schedule.empty()) throw ConfigError("load schedule is empty");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const auto& s = schedule[k];
        if (!std::isfinite(s.t_start) || !std::isfinite(s.g) || !std::isfinite(s.b))
            throw ConfigError("load segment has non-finite values");
        if (k > 0 && !(s.t_start > schedule[k - 1].t_start))
            throw ConfigError("load segment start times must be strictly increasing");
    }
}

const LoadSegment& LoadModel::active(double t) const {
    if (schedule.empty() || t < schedule.front().t_start)
        throw ConfigError("no active load segment at t=" + std::to_string(t));
    auto it = std::upper_bound(schedule.begin(), schedule.end(), t,
                               [](double tt, const LoadSegment& s) { return tt < s.t_start; });
    return *(it - 1);
}

std::vector<double> LoadModel::step_times() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < schedule.size(); ++k) out.push_back(schedule[k].t_start);
    return out;
}

Vec2 load_current(const LoadSegment& s, const Vec2& v) {
    return Vec2{s.g * v.a - s.b * v.b, s.b * v.a + s.g * v.b} + s.i_const;
}

Vec2 load_current(const LoadModel& load, double t, const Vec2& v) {
    return load_current(load.active(t), v);
}

ModulationCommand clamp_modulation(const Vec2& m) {
    const double n = norm(m);
    if (n > 1.0) return {m / n, true};
    return {m, false};
}

ModulationIO modulation_io(const ModulationCommand& m, const PlantState& s) {
    return {0.5 * dot(m.m, s.i_ab), m.m * (0.5 * s.v_dc)};
}

PlantState plant_deriv(const ConverterParams& p, const PlantState& s, const Vec2& m,
                       double i_dc, const Vec2& i_load) {
    PlantState d;
    d.v_dc = (-p.g_dc * s.v_dc + i_dc - 0.5 * dot(m, s.i_ab)) / p.c_dc;
    d.i_ab = (-p.r * s.i_ab + m * (0.5 * s.v_dc) - s.v_ab) / p.l;
    d.v_ab = (s.i_ab - i_load) / p.c;
    const GammaDeriv g = gamma_deriv(p, s.i_gamma, s.v_gamma);
    d.i_gamma = g.di_gamma;
    d.v_gamma = g.dv_gamma;
    return d;
}

PlantState converter_deriv(const ConverterParams& p, const PlantState& s,
                           const ModulationCommand& m, const LoadModel& load, double t) {
    return plant_deriv(p, s, m.m, p.i_dc, load_current(load, t, s.v_ab));
}

GammaDeriv gamma_deriv(const ConverterParams& p, double i_gamma, double v_gamma) {
    return {(-p.r * i_gamma - v_gamma) / p.l, i_gamma / p.c};
}

}  // namespace gfm
