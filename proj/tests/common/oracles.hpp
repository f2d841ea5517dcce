// Convergence oracles shared by the unit tests and the acceptance suite.
#pragma once

#include "lagdrift/analytic.hpp"
#include "lagdrift/dynamics.hpp"
#include "lagdrift/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracles {

using namespace lagdrift;

/// Scaled-unit drifter used for the slow-manifold study: R = 0.6 (so the Du/Dt
/// coefficient is nonzero), delta_p matched to R, wind drag off.
inline dynamics::DrifterParams manifold_params(double eps) {
    dynamics::DrifterParams p;
    p.R = 0.6;
    p.delta_p = (2.0 / p.R - 1.0) / 2.0;
    p.delta_a = 0.0;
    p.wind_drag = 0.0;
    p.eps = eps;
    p.St = eps * p.R;
    p.mu = 1.0 / eps;
    return p;
}

/// Max over t in [0.5, 2] of |v_full - v_reduced(x_full)| with H = 0, starting from
/// v(0) = u(x0, 0) and using RK4 with dt = eps / 20.
inline double slow_manifold_gap(const flowfield::AnalyticField& field, const Vec2& x0,
                                double eps, double f = 0.5) {
    const auto p = manifold_params(eps);
    const dynamics::FlowContext flow = [&](const Vec2& x, double t) {
        const auto j = flowfield::analytic_jet(field, x, t);
        return dynamics::FlowSample{j.value, flowfield::material_derivative(j), {}, {}, f};
    };
    const double dt = eps / 20.0;
    const int steps = static_cast<int>(std::lround(2.0 / dt));
    dynamics::FullState s{x0, flow(x0, 0.0).u};
    double gap = 0.0;
    for (int k = 1; k <= steps; ++k) {
        s = dynamics::full_mr_rk4_step(s, (k - 1) * dt, dt, flow, p);
        const double t = k * dt;
        if (t < 0.5 - 1e-12) continue;
        const Vec2 reduced = dynamics::reduced_mr_velocity(flow(s.x, t), p);
        gap = std::max(gap, (s.v - reduced).norm());
    }
    return gap;
}

/// Solid rotation written directly in degree space about `center`:
/// dlon/dt = -omega (lat - lat0), dlat/dt = omega (lon - lon0).
inline integrate::VelocityModel degree_rotation(GeoPoint center, double omega) {
    return [center, omega](const GeoPoint& p, double) {
        const double dlon = -omega * (p.lat - center.lat);
        const double dlat = omega * (p.lon - center.lon);
        return Vec2{dlon * meters_per_degree_lon(p.lat), dlat * kMetersPerDegree};
    };
}

/// Distance in degrees between start and end after one rotation period in n steps.
inline double rotation_closure_error(int n_steps) {
    const GeoPoint center{-88.0, 26.0};
    const double period = 86400.0;
    const double omega = 2.0 * std::numbers::pi / period;
    const auto model = degree_rotation(center, omega);
    const GeoPoint start{center.lon + 0.5, center.lat};
    const auto tr = integrate::integrate_trajectory(model, start, 0.0, n_steps, period / n_steps);
    const GeoPoint end = tr.positions.back();
    return std::hypot(end.lon - start.lon, end.lat - start.lat);
}

}  // namespace oracles
