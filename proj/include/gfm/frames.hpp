#pragma once

#include <cmath>
#include <utility>

namespace gfm {

// Two-component vector used for every alpha-beta quantity. Amplitudes are
// power-invariant: a phase amplitude A shows up as a norm of A*sqrt(3/2).
struct Vec2 {
    double a = 0.0;  // alpha
    double b = 0.0;  // beta

    Vec2() = default;
    constexpr Vec2(double alpha, double beta) : a(alpha), b(beta) {}

    Vec2 operator+(const Vec2& o) const { return {a + o.a, b + o.b}; }
    Vec2 operator-(const Vec2& o) const { return {a - o.a, b - o.b}; }
    Vec2 operator-() const { return {-a, -b}; }
    Vec2 operator*(double s) const { return {a * s, b * s}; }
    Vec2 operator/(double s) const { return {a / s, b / s}; }
    Vec2& operator+=(const Vec2& o) { a += o.a; b += o.b; return *this; }
    Vec2& operator-=(const Vec2& o) { a -= o.a; b -= o.b; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& x, const Vec2& y) { return x.a * y.a + x.b * y.b; }
inline double norm(const Vec2& x) { return std::hypot(x.a, x.b); }

// J2 = [[0,-1],[1,0]], rotation by +pi/2.
inline Vec2 j2(const Vec2& x) { return {-x.b, x.a}; }

// R_angle applied to x (counter-clockwise rotation).
inline Vec2 rotate(const Vec2& x, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x.a - s * x.b, s * x.a + c * x.b};
}

// Unit vector (-sin t, cos t), the phase convention of every modulation law.
inline Vec2 polar_unit(double theta) { return {-std::sin(theta), std::cos(theta)}; }

using AlphaBetaSignal = Vec2;

struct AbcSignal {
    double a = 0.0, b = 0.0, c = 0.0;
};

struct DqSignal {
    double d = 0.0, q = 0.0;
    double gamma_angle = 0.0;
};

struct ClarkeResult {
    AlphaBetaSignal ab;
    double gamma = 0.0;
};

struct PowerPQ {
    double p = 0.0;  // watts
    double q = 0.0;  // var
};

ClarkeResult clarke(const AbcSignal& abc);
AbcSignal inverse_clarke(const AlphaBetaSignal& ab, double gamma);

// Rotates (alpha, beta) by -angle into the dq frame.
DqSignal park(const AlphaBetaSignal& ab, double angle);
AlphaBetaSignal inverse_park(const DqSignal& dq);

// P = v.i, Q = v_beta i_alpha - v_alpha i_beta.
PowerPQ instantaneous_pq(const AlphaBetaSignal& v, const AlphaBetaSignal& i);

bool is_balanced(const AbcSignal& abc, double tol);

}  // namespace gfm
