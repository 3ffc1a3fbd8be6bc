#pragma once

#include <Eigen/Dense>

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"
#include "gfm/sim.hpp"

namespace gfm {

// ---- matching-control steady state ------------------------------------------

struct SteadyStateProfile {
    double p_x = 0.0;
    double v_dc_ss = 0.0;
    double vx_amp = 0.0;  // |v_x| = mu v_dc / 2
    double omega = 0.0;
};

// Plus root of G_dc v^2 - i_dc v + P_x = 0.
SteadyStateProfile steady_state_profile(const ConverterParams& p, double p_x);
// Minus root; the low-voltage branch that the closed loop does not settle on.
SteadyStateProfile steady_state_profile_unstable(const ConverterParams& p, double p_x);

// P_x as a function of |v_x| and of omega (the two parabolas behind the droop curves).
double active_power_from_vx(const ConverterParams& p, double vx_amp);
double active_power_from_omega(const ConverterParams& p, double omega);

struct DroopCoefficients {
    double d_vx = 0.0;     // dP_x/d|v_x|, W/V
    double d_omega = 0.0;  // dP_x/domega, W/(rad/s)
};

DroopCoefficients droop_coefficients(const ConverterParams& p, const SteadyStateProfile& at);

struct MaxPower {
    double p_max = 0.0;
    double v_max = 0.0;
    double omega_max = 0.0;
};

MaxPower max_power(const ConverterParams& p);

// ---- power balance and reactive characteristics ----------------------------

// kCircuit follows the filter equations for the Q convention of instantaneous_pq:
//   Q_load = Q_x - w L |i|^2 + w C |v|^2.
// kAlternate flips the sign of the inductor term (+w L |i|^2).
enum class FilterSign { kCircuit, kAlternate };

struct LoadPower {
    double p_load = 0.0;
    double q_load = 0.0;
};

LoadPower filter_power_balance(const ConverterParams& p, double p_x, double q_x, double il_amp, double v_amp,
                               double omega_s, FilterSign sign = FilterSign::kCircuit);

enum class Branch { kOver, kUnder };

// Purely reactive load b (g = 0) giving inductor current amplitude il_amp.
// The circuit form solves |v_x|^2 = |i|^2 (R^2 + (wL - 1/(wC + b))^2):
//   over:  b = |i|/(wL|i| + s) - wC,   under: b = |i|/(wL|i| - s) - wC,
//   s = sqrt(|v_x|^2 - R^2 |i|^2) with |v_x| from the steady DC voltage at P_x = R|i|^2.
// alternate_form = true evaluates the sign-flipped expression +-(|i|/(s - wL|i|) - wC) instead.
double reactive_characteristic_b(const ConverterParams& p, double il_amp, double omega_s, Branch branch,
                                 bool alternate_form = false);

// Largest inductor current amplitude sqrt(P_max / R).
double max_current_amplitude(const ConverterParams& p);

// kappa = |C w + b|, the ratio |i| / |v| for a purely reactive load.
double amplitude_ratio(const ConverterParams& p, double b, double omega_s);

struct OpenCircuit {
    double il_open = 0.0;
    double qx_open = 0.0;
    double px_open = 0.0;
};

// v_amp is the capacitor amplitude in whatever convention the caller wants
// reproduced. The default uses |v_x| = mu i_dc/(2 G_dc) and w = eta i_dc/G_dc.
OpenCircuit open_circuit_quantities(const ConverterParams& p, double v_amp, double omega_s,
                                    FilterSign sign = FilterSign::kCircuit);
OpenCircuit open_circuit_quantities(const ConverterParams& p);

// ---- storage and passivity ---------------------------------------------------

// S = C_dc v_dc^2/2 + C |v|^2/2 + L |i|^2/2
double storage_open(const PlantState& s, const ConverterParams& p);
// W = S + |m|^2/2
double storage_closed(const PlantState& s, const Vec2& m, const ConverterParams& p);

struct PassivityReport {
    double max_violation = 0.0;  // J
    double peak_storage = 0.0;   // J
};

// max over t1 <= t2 of S(t2) - S(t1) - int_{t1}^{t2} (i_dc v_dc - i_load.v) dt,
// using the storage and supply integral recorded in the trace.
PassivityReport passivity_audit(const SimTrace& trace);
// Same with the storage recomputed from the states (circuit with filter).
PassivityReport passivity_audit(const SimTrace& trace, const ConverterParams& p);

// ---- dq equilibrium and Lyapunov certificate ---------------------------------

// Equilibrium in the frame rotating with the controller angle, where m_dq = (0, mu).
struct DqEquilibrium {
    double v_dc_s = 0.0;
    Vec2 i_dq_s;
    Vec2 v_dq_s;
    double omega_s = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// Damped Newton from the open-circuit point. Throws NumericError on failure.
DqEquilibrium dq_equilibrium(const ConverterParams& p, double g, double b, int max_iter = 50, double tol = 1e-10);

// Residual of the five steady-state equations at a candidate point.
Eigen::Matrix<double, 5, 1> dq_residual(const ConverterParams& p, double g, double b,
                                        const Eigen::Matrix<double, 5, 1>& z);

struct LyapunovReport {
    double condition_lhs = 0.0;  // R C^2 eta^2 |v|^2 + g L^2 eta^2 |i|^2
    double condition_rhs = 0.0;  // 4 R G_dc g
    bool holds = false;
    Eigen::Matrix<double, 5, 5> p_matrix;  // dW~/dt = e' P e
    Eigen::Matrix<double, 5, 1> eigenvalues;
    double max_eigenvalue = 0.0;
    double w_tilde = 0.0;
};

LyapunovReport lyapunov_condition(const ConverterParams& p, const DqEquilibrium& eq, double g);

// W~ = C_dc dv^2/2 + L |R(-theta) i - i_s|^2/2 + C |R(-theta) v - v_s|^2/2.
double w_tilde(const ConverterParams& p, const DqEquilibrium& eq, const PlantState& s, double theta);

// ---- internal model ----------------------------------------------------------

// AC filter x = (i, v) driven by u = v_x with du/dt = S u, S = omega J2:
// dx/dt = A x + D u. The steady-state locus x = F u solves A F - F S + D = 0.
struct InternalModel {
    Eigen::Matrix<double, 4, 2> f;
    Eigen::Matrix4d a;
    Eigen::Matrix<double, 4, 2> d;
    Eigen::Matrix2d s;
    double sylvester_residual = 0.0;
    bool a_hurwitz = false;
    double spectral_abscissa = 0.0;
};

// F = [M^-1; (M N)^-1], M = L w J + R I + N^-1, N = C w J + G_load.
InternalModel internal_model_manifold(const ConverterParams& p, double g, double b, double omega_s);

// ---- reactive shaping through mu at zero active power -------------------------

// Open-circuit line |v_x| = (mu0 + k_mu Q_x) i_dc / (2 G_dc).
double mu_shaping_amplitude(const ConverterParams& p, double mu0, double k_mu, double q_x);
// Fold of the inductive branch on the filterless model with P_x = 0:
// largest -b for which an equilibrium exists, b = -1/(4 a^2 k_mu mu0), a = i_dc/(2 G_dc).
double mu_shaping_fold_susceptance(const ConverterParams& p, double mu0, double k_mu);

}  // namespace gfm
