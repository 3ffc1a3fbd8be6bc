#include "gfm/frames.hpp"

#include <algorithm>
#include <stdexcept>

namespace gfm {

namespace {
const double kS23 = std::sqrt(2.0 / 3.0);
const double kHalfSqrt3 = std::sqrt(3.0) / 2.0;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}  // namespace

ClarkeResult clarke(const AbcSignal& x) {
    ClarkeResult r;
    r.ab.a = kS23 * (x.a - 0.5 * x.b - 0.5 * x.c);
    r.ab.b = kS23 * (kHalfSqrt3 * x.b - kHalfSqrt3 * x.c);
    r.gamma = kS23 * kInvSqrt2 * (x.a + x.b + x.c);
    return r;
}

AbcSignal inverse_clarke(const AlphaBetaSignal& ab, double gamma) {
    // transpose of the forward matrix
    const double g = kS23 * kInvSqrt2 * gamma;
    AbcSignal x;
    x.a = kS23 * ab.a + g;
    x.b = kS23 * (-0.5 * ab.a + kHalfSqrt3 * ab.b) + g;
    x.c = kS23 * (-0.5 * ab.a - kHalfSqrt3 * ab.b) + g;
    return x;
}

DqSignal park(const AlphaBetaSignal& ab, double angle) {
    const Vec2 r = rotate(ab, -angle);
    return {r.a, r.b, angle};
}

AlphaBetaSignal inverse_park(const DqSignal& dq) {
    return rotate({dq.d, dq.q}, dq.gamma_angle);
}

PowerPQ instantaneous_pq(const AlphaBetaSignal& v, const AlphaBetaSignal& i) {
    return {v.a * i.a + v.b * i.b, v.b * i.a - v.a * i.b};
}

bool is_balanced(const AbcSignal& x, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("is_balanced: tol must be positive");
    const double n = std::sqrt(x.a * x.a + x.b * x.b + x.c * x.c);
    return std::abs(x.a + x.b + x.c) <= tol * std::max(1.0, n);
}

}  // namespace gfm
