#pragma once

// Test-side reference computations. None of these call into the library's
// analysis code; they re-derive each quantity from the circuit equations.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

namespace oracle {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

struct Params {
    double c_dc = 1e-3, g_dc = 0.1, i_dc = 100.0, r = 0.1, l = 5e-4, c = 1e-5, eta = 0.3142, mu = 0.33;
};

// Power-invariant Clarke matrix written out entry by entry.
inline void clarke(double a, double b, double c, double& alpha, double& beta, double& gamma) {
    const double k = std::sqrt(2.0 / 3.0);
    alpha = k * (a - 0.5 * b - 0.5 * c);
    beta = k * (std::sqrt(3.0) / 2.0 * b - std::sqrt(3.0) / 2.0 * c);
    gamma = k * (a + b + c) / std::sqrt(2.0);
}

// DC balance G v^2 - i_dc v + P = 0, larger root.
inline double vdc_from_power(const Params& p, double px) {
    return (p.i_dc + std::sqrt(p.i_dc * p.i_dc - 4.0 * p.g_dc * px)) / (2.0 * p.g_dc);
}

// P_x(|v_x|) from v_dc = 2|v_x|/mu substituted into the DC balance.
inline double power_from_vx(const Params& p, double vx) {
    const double v = 2.0 * vx / p.mu;
    return p.i_dc * v - p.g_dc * v * v;
}

inline double power_from_omega(const Params& p, double w) {
    const double v = w / p.eta;
    return p.i_dc * v - p.g_dc * v * v;
}

template <class F>
double central_diff(F f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Phasor solution of the AC filter with load y = g + j b.
// alpha-beta vectors map to complex numbers alpha + j beta rotating as e^{j w t}.
struct Phasors {
    cplx vx, i, v, il;
    double p_x, q_x, p_load, q_load;
};

inline Phasors filter_phasors(const Params& p, cplx vx, double w, double g, double b) {
    const cplx y_node = cplx(g, b + w * p.c);           // I = y_node V
    const cplx z_series = cplx(p.r, w * p.l);           // (R + jwL) I = Vx - V
    const cplx v = vx / (1.0 + z_series * y_node);
    const cplx i = y_node * v;
    const cplx il = cplx(g, b) * v;
    // P = Re(v conj(i)), Q = Im(v conj(i)) = v_beta i_alpha - v_alpha i_beta
    const cplx sx = vx * std::conj(i);
    const cplx sl = v * std::conj(il);
    return {vx, i, v, il, sx.real(), sx.imag(), sl.real(), sl.imag()};
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    if (flo * f(hi) > 0.0) throw std::runtime_error("bisect: no sign change");
    for (int k = 0; k < iters; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Steady state of a purely reactive load b under matching control:
// the inductor current amplitude as a function of b, found by iterating the
// DC balance with the resistive loss P_x = R |i|^2.
inline double il_of_b(const Params& p, double b) {
    double v = p.i_dc / p.g_dc;
    for (int k = 0; k < 200; ++k) {
        const double w = p.eta * v;
        const Phasors ph = filter_phasors(p, cplx(0.5 * p.mu * v, 0.0), w, 0.0, b);
        v = vdc_from_power(p, ph.p_x);
    }
    const double w = p.eta * v;
    return std::abs(filter_phasors(p, cplx(0.5 * p.mu * v, 0.0), w, 0.0, b).i);
}

// Exact scalar solutions used for integrator checks.
inline double exp_decay(double t) { return std::exp(-t); }

}  // namespace oracle
