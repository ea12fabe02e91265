#pragma once

// Independent oracles used by the test suites only. These deliberately avoid
// the library's own propagation/shooting paths wherever they check one.

#include <cmath>
#include <random>

#include "symporb/dynamics.hpp"

namespace symporb::oracles {

// --- rotating Kepler problem (CRTBP with mu -> 0) --------------------------
//
// A circular orbit of radius r about the origin-centred primary, seen in the
// rotating frame: x(0) = r, ydot(0) = s/sqrt(r) - r with s=+1 direct,
// s=-1 retrograde. The rotating-frame period is 2*pi/|omega - 1| with
// omega = s * r^{-3/2}.

inline double kepler_circular_vy(double r, int sense = +1) {
    return sense / std::sqrt(r) - r;
}

inline double kepler_rotating_period(double r, int sense = +1) {
    const double omega = sense / (r * std::sqrt(r));
    return 2.0 * M_PI / std::abs(omega - 1.0);
}

// Closed-form rotating-frame circular state (planar).
inline Vec6 kepler_circular_state(double r, int sense = +1) {
    Vec6 s = Vec6::Zero();
    s[0] = r;
    s[4] = kepler_circular_vy(r, sense);
    return s;
}

// --- finite differences -----------------------------------------------------

// Central finite-difference Jacobian of an R^6 -> R^6 map.
template <typename F>
Mat6 central_difference_jacobian(const F& f, const Vec6& s, double h) {
    Mat6 j;
    for (int k = 0; k < 6; ++k) {
        Vec6 sp = s, sm = s;
        sp[k] += h;
        sm[k] -= h;
        const Vec6 fp = f(sp);
        const Vec6 fm = f(sm);
        j.col(k) = (fp - fm) / (2.0 * h);
    }
    return j;
}

// --- collinear libration point by 1-D bisection ----------------------------

// Root of the on-axis acceleration between the primaries (L1) or beyond the
// secondary (L2), CRTBP only.
inline double collinear_libration_x(const Model& m, int which) {
    auto ax = [&](double x) {
        Vec6 s = Vec6::Zero();
        s[0] = x;
        return vector_field(m, s)[3];
    };
    double lo, hi;
    if (which == 1) {
        lo = 1.0 - m.mu - std::pow(m.mu / 3.0, 1.0 / 3.0) * 2.0;
        hi = 1.0 - m.mu - 1e-9;
    } else {
        lo = 1.0 - m.mu + 1e-9;
        hi = 1.0 - m.mu + std::pow(m.mu / 3.0, 1.0 / 3.0) * 2.0;
    }
    double flo = ax(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = ax(mid);
        if (flo * fmid <= 0.0)
            hi = mid;
        else {
            lo = mid;
            flo = fmid;
        }
    }
    return 0.5 * (lo + hi);
}

// --- random states ----------------------------------------------------------

inline Vec6 random_state(std::mt19937& rng, double pos_scale = 0.5,
                         double vel_scale = 0.5, double pos_offset = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec6 s;
    s << pos_offset + pos_scale * u(rng), pos_scale * u(rng), pos_scale * u(rng),
        vel_scale * u(rng), vel_scale * u(rng), vel_scale * u(rng);
    return s;
}

}  // namespace symporb::oracles
