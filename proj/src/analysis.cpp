#include "gfm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gfm/errors.hpp"

namespace gfm {

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

double discriminant(const ConverterParams& p, double p_x) {
    const double d = p.i_dc * p.i_dc - 4.0 * p.g_dc * p_x;
    if (d < 0.0)
        throw NumericError("no real steady state: P_x = " + std::to_string(p_x) + " W exceeds i_dc^2/(4 G_dc)");
    return d;
}

SteadyStateProfile profile_at(const ConverterParams& p, double p_x, double v_dc) {
    return {p_x, v_dc, 0.5 * p.mu * v_dc, p.eta * v_dc};
}

// a I + b J as a 2x2 matrix
Eigen::Matrix2d aibj(double a, double b) {
    Eigen::Matrix2d m;
    m << a, -b, b, a;
    return m;
}

}  // namespace

SteadyStateProfile steady_state_profile(const ConverterParams& p, double p_x) {
    const double d = discriminant(p, p_x);
    return profile_at(p, p_x, (p.i_dc + std::sqrt(d)) / (2.0 * p.g_dc));
}

SteadyStateProfile steady_state_profile_unstable(const ConverterParams& p, double p_x) {
    const double d = discriminant(p, p_x);
    return profile_at(p, p_x, (p.i_dc - std::sqrt(d)) / (2.0 * p.g_dc));
}

double active_power_from_vx(const ConverterParams& p, double vx) {
    return 2.0 * p.i_dc * vx / p.mu - 4.0 * p.g_dc * vx * vx / (p.mu * p.mu);
}

double active_power_from_omega(const ConverterParams& p, double w) {
    return p.i_dc * w / p.eta - p.g_dc * w * w / (p.eta * p.eta);
}

DroopCoefficients droop_coefficients(const ConverterParams& p, const SteadyStateProfile& at) {
    DroopCoefficients d;
    d.d_vx = -(8.0 * p.g_dc / (p.mu * p.mu)) * at.vx_amp + 2.0 * p.i_dc / p.mu;
    d.d_omega = -(2.0 * p.g_dc / (p.eta * p.eta)) * at.omega + p.i_dc / p.eta;
    return d;
}

MaxPower max_power(const ConverterParams& p) {
    return {p.i_dc * p.i_dc / (4.0 * p.g_dc), p.mu * p.i_dc / (4.0 * p.g_dc), p.eta * p.i_dc / (2.0 * p.g_dc)};
}

LoadPower filter_power_balance(const ConverterParams& p, double p_x, double q_x, double il_amp, double v_amp,
                               double omega_s, FilterSign sign) {
    if (omega_s == 0.0) throw NumericError("filter power balance needs omega_s != 0");
    const double il2 = il_amp * il_amp;
    const double l_term = omega_s * p.l * il2;
    LoadPower out;
    out.p_load = p_x - p.r * il2;
    out.q_load = q_x + (sign == FilterSign::kAlternate ? l_term : -l_term) + omega_s * p.c * v_amp * v_amp;
    return out;
}

double max_current_amplitude(const ConverterParams& p) { return p.i_dc / (2.0 * std::sqrt(p.g_dc * p.r)); }

double reactive_characteristic_b(const ConverterParams& p, double il, double w, Branch branch, bool alternate_form) {
    if (!(il > 0.0)) throw NumericError("current amplitude must be positive");
    if (il > max_current_amplitude(p) * (1.0 + 1e-12))
        throw NumericError("current amplitude beyond i_dc/(2 sqrt(G_dc R))");
    const double inner = std::max(p.i_dc * p.i_dc - 4.0 * p.g_dc * p.r * il * il, 0.0);
    const double vx = p.mu / (4.0 * p.g_dc) * (p.i_dc + std::sqrt(inner));
    const double rad = vx * vx - p.r * p.r * il * il;
    if (rad < 0.0) throw NumericError("reactive characteristic undefined: negative radicand");
    const double s = std::sqrt(rad);
    if (alternate_form) {
        const double x = il / (s - p.l * il * w) - p.c * w;
        return branch == Branch::kOver ? x : -x;
    }
    const double den = branch == Branch::kOver ? w * p.l * il + s : w * p.l * il - s;
    return il / den - w * p.c;
}

double amplitude_ratio(const ConverterParams& p, double b, double w) { return std::abs(p.c * w + b); }

OpenCircuit open_circuit_quantities(const ConverterParams& p, double v, double w, FilterSign sign) {
    OpenCircuit o;
    o.il_open = p.c * v * w;
    const double l_term = p.l * p.c * p.c * w * w * w * v * v;
    o.qx_open = (sign == FilterSign::kAlternate ? -l_term : l_term) - p.c * w * v * v;
    o.px_open = p.r * o.il_open * o.il_open;
    return o;
}

OpenCircuit open_circuit_quantities(const ConverterParams& p) {
    const SteadyStateProfile s = steady_state_profile(p, 0.0);
    return open_circuit_quantities(p, s.vx_amp, s.omega);
}

double storage_open(const PlantState& s, const ConverterParams& p) {
    return 0.5 * p.c_dc * s.v_dc * s.v_dc + 0.5 * p.c * dot(s.v_ab, s.v_ab) + 0.5 * p.l * dot(s.i_ab, s.i_ab);
}

double storage_closed(const PlantState& s, const Vec2& m, const ConverterParams& p) {
    return storage_open(s, p) + 0.5 * dot(m, m);
}

namespace {

PassivityReport audit(const SimTrace& trace, const std::vector<double>& storage) {
    PassivityReport r;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const double v = storage[k] - trace.samples[k].supply_int;
        lowest = std::min(lowest, v);
        r.max_violation = std::max(r.max_violation, v - lowest);
        r.peak_storage = std::max(r.peak_storage, storage[k]);
    }
    return r;
}

}  // namespace

PassivityReport passivity_audit(const SimTrace& trace) {
    return audit(trace, trace.column(&TraceSample::storage));
}

PassivityReport passivity_audit(const SimTrace& trace, const ConverterParams& p) {
    std::vector<double> s;
    s.reserve(trace.samples.size());
    for (const auto& x : trace.samples) s.push_back(storage_open(x.s, p));
    return audit(trace, s);
}

// z = (v_dc, i_d, i_q, v_d, v_q), omega = eta v_dc, m_dq = (0, mu).
Vec5 dq_residual(const ConverterParams& p, double g, double b, const Vec5& z) {
    const double v = z(0), id = z(1), iq = z(2), vd = z(3), vq = z(4);
    const double w = p.eta * v;
    Vec5 f;
    f(0) = -p.g_dc * v + p.i_dc - 0.5 * p.mu * iq;
    f(1) = -p.r * id - vd + w * p.l * iq;
    f(2) = -p.r * iq + 0.5 * p.mu * v - vq - w * p.l * id;
    f(3) = id - g * vd + b * vq + w * p.c * vq;
    f(4) = iq - b * vd - g * vq - w * p.c * vd;
    return f;
}

namespace {

Mat5 dq_jacobian(const ConverterParams& p, double g, double b, const Vec5& z) {
    const double id = z(1), iq = z(2), vd = z(3), vq = z(4);
    const double w = p.eta * z(0);
    const double e = p.eta;
    Mat5 j;
    j << -p.g_dc, 0, -0.5 * p.mu, 0, 0,
         e * p.l * iq, -p.r, w * p.l, -1, 0,
         0.5 * p.mu - e * p.l * id, -w * p.l, -p.r, 0, -1,
         e * p.c * vq, 1, 0, -g, b + w * p.c,
         -e * p.c * vd, 0, 1, -(b + w * p.c), -g;
    return j;
}

}  // namespace

DqEquilibrium dq_equilibrium(const ConverterParams& p, double g, double b, int max_iter, double tol) {
    if (!(g > 0.0)) throw ConfigError("dq equilibrium needs g > 0");
    Vec5 z;
    const double v0 = p.i_dc / p.g_dc;
    const double w0 = p.eta * v0;
    const Eigen::Vector2d vdq(0.0, 0.5 * p.mu * v0);
    const Eigen::Vector2d idq = aibj(g, b + w0 * p.c) * vdq;
    z << v0, idq(0), idq(1), vdq(0), vdq(1);

    Vec5 f = dq_residual(p, g, b, z);
    double res = f.lpNorm<Eigen::Infinity>();
    int it = 0;
    while (res > tol && it < max_iter) {
        ++it;
        const Vec5 step = dq_jacobian(p, g, b, z).partialPivLu().solve(-f);
        double lambda = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            const Vec5 zn = z + lambda * step;
            const Vec5 fn = dq_residual(p, g, b, zn);
            const double rn = fn.lpNorm<Eigen::Infinity>();
            if (std::isfinite(rn) && rn < res) {
                z = zn;
                f = fn;
                res = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    if (!(res <= tol))
        throw NumericError("dq equilibrium did not converge (best residual " + std::to_string(res) + ")");
    DqEquilibrium eq;
    eq.v_dc_s = z(0);
    eq.i_dq_s = {z(1), z(2)};
    eq.v_dq_s = {z(3), z(4)};
    eq.omega_s = p.eta * z(0);
    eq.residual = res;
    eq.iterations = it;
    return eq;
}

// Error e = (dv_dc, di, dv) in the controller frame. Along the nonlinear error
// dynamics dW~/dt = -G_dc dv^2 - R|di|^2 - g|dv|^2
//                   - L eta dv_dc di.J2 i_s - C eta dv_dc dv.J2 v_s,
// which is e' P e with the symmetric P assembled below.
LyapunovReport lyapunov_condition(const ConverterParams& p, const DqEquilibrium& eq, double g) {
    if (!(g > 0.0)) throw ConfigError("Lyapunov condition needs g > 0");
    LyapunovReport r;
    const double e2 = p.eta * p.eta;
    r.condition_lhs = p.r * p.c * p.c * e2 * dot(eq.v_dq_s, eq.v_dq_s) + g * p.l * p.l * e2 * dot(eq.i_dq_s, eq.i_dq_s);
    r.condition_rhs = 4.0 * p.r * p.g_dc * g;
    r.holds = r.condition_lhs < r.condition_rhs;

    const Vec2 ji = j2(eq.i_dq_s);
    const Vec2 jv = j2(eq.v_dq_s);
    Mat5 m = Mat5::Zero();
    m(0, 0) = -p.g_dc;
    m(1, 1) = m(2, 2) = -p.r;
    m(3, 3) = m(4, 4) = -g;
    m(0, 1) = m(1, 0) = -0.5 * p.l * p.eta * ji.a;
    m(0, 2) = m(2, 0) = -0.5 * p.l * p.eta * ji.b;
    m(0, 3) = m(3, 0) = -0.5 * p.c * p.eta * jv.a;
    m(0, 4) = m(4, 0) = -0.5 * p.c * p.eta * jv.b;
    r.p_matrix = m;
    Eigen::SelfAdjointEigenSolver<Mat5> es(m);
    r.eigenvalues = es.eigenvalues();
    r.max_eigenvalue = r.eigenvalues.maxCoeff();
    return r;
}

double w_tilde(const ConverterParams& p, const DqEquilibrium& eq, const PlantState& s, double theta) {
    const double dv = s.v_dc - eq.v_dc_s;
    const Vec2 di = rotate(s.i_ab, -theta) - eq.i_dq_s;
    const Vec2 dvv = rotate(s.v_ab, -theta) - eq.v_dq_s;
    return 0.5 * p.c_dc * dv * dv + 0.5 * p.l * dot(di, di) + 0.5 * p.c * dot(dvv, dvv);
}

InternalModel internal_model_manifold(const ConverterParams& p, double g, double b, double w) {
    const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d n = aibj(g, p.c * w + b);
    if (std::abs(n.determinant()) < 1e-300) throw NumericError("N singular (critical reactive load)");
    const Eigen::Matrix2d m = aibj(p.r, p.l * w) + n.inverse();
    if (std::abs(m.determinant()) < 1e-300) throw NumericError("M singular");

    InternalModel im;
    im.f.topRows<2>() = m.inverse();
    im.f.bottomRows<2>() = (m * n).inverse();
    im.a.setZero();
    im.a.topLeftCorner<2, 2>() = -(p.r / p.l) * i2;
    im.a.topRightCorner<2, 2>() = -(1.0 / p.l) * i2;
    im.a.bottomLeftCorner<2, 2>() = (1.0 / p.c) * i2;
    im.a.bottomRightCorner<2, 2>() = -aibj(g, b) / p.c;
    im.d.setZero();
    im.d.topRows<2>() = (1.0 / p.l) * i2;
    im.s = aibj(0.0, w);
    im.sylvester_residual = (im.a * im.f - im.f * im.s + im.d).lpNorm<Eigen::Infinity>();
    const Eigen::Vector4cd ev = im.a.eigenvalues();
    im.spectral_abscissa = ev.real().maxCoeff();
    im.a_hurwitz = im.spectral_abscissa < 0.0;
    return im;
}

double mu_shaping_amplitude(const ConverterParams& p, double mu0, double k_mu, double q_x) {
    return (mu0 + k_mu * q_x) * p.i_dc / (2.0 * p.g_dc);
}

double mu_shaping_fold_susceptance(const ConverterParams& p, double mu0, double k_mu) {
    const double a = p.i_dc / (2.0 * p.g_dc);
    return -1.0 / (4.0 * a * a * k_mu * mu0);
}

}  // namespace gfm
