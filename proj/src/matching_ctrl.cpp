#include "gfm/matching_ctrl.hpp"

#include <cmath>

#include "gfm/errors.hpp"

namespace gfm {

double MatchingState::theta() const { return std::atan2(-xi.a, xi.b); }

Vec2 matching_modulation(double mu, const Vec2& xi) {
    const double n = norm(xi);
    return {mu * (xi.a / n), mu * (xi.b / n)};
}

MatchingOutput matching_step(const ConverterParams& p, const MatchingState& st, double v_dc, double dt) {
    MatchingOutput out;
    const Vec2 r = rotate(st.xi, p.eta * v_dc * dt);
    out.st.xi = r / norm(r);
    out.m = {matching_modulation(p.mu, out.st.xi), false};
    return out;
}

EquivalentMachine equivalent_machine(const ConverterParams& p, double v_dc, double i_x) {
    if (!(p.eta > 0.0)) throw ConfigError("eta must be positive");
    const double e2 = p.eta * p.eta;
    return {p.c_dc / e2, p.g_dc / e2, p.i_dc / p.eta, i_x / p.eta, p.eta * v_dc};
}

Vec2 vx_terminal_deriv(const ConverterParams& p, const Vec2& v_x, const Vec2& i_ab) {
    const double n = norm(v_x);
    if (!(n > kEpsAmp)) throw NumericError("v_x terminal dynamics singular at |v_x| = 0");
    const double mu2 = p.mu * p.mu;
    const Vec2 u = v_x / n;
    const Vec2 rhs = (2.0 * p.i_dc / p.mu) * u - dot(u, i_ab) * u - (4.0 * p.g_dc / mu2) * v_x +
                     (8.0 * p.c_dc * p.eta / (mu2 * p.mu)) * n * j2(v_x);
    return rhs / (4.0 * p.c_dc / mu2);
}

}  // namespace gfm
