// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/dynamics.hpp"

#include "lagdrift/error.hpp"

#include <cmath>

namespace lagdrift::dynamics {

DrifterParams nondimensionalize(const PhysicalDrifterParams& p, double L, double U) {
    if (!(L > 0.0) || !(U > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "length and velocity scales must be positive");
    }
    if (!(p.rho_p > 0.0) || !(p.rho_f > 0.0) || !(p.rho_a > 0.0) || !(p.nu_f > 0.0) ||
        !(p.nu_a > 0.0) || !(p.a > 0.0) || !(p.alpha > 0.0) || !(p.g > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "physical drifter parameters must be positive");
    }
    DrifterParams d;
    d.L = L;
    d.U = U;
    d.T = L / U;
    d.R = 2.0 * p.rho_f / (p.rho_f + 2.0 * p.rho_p);
    const double Re = U * L / p.nu_f;
    const double aL = p.a / L;
    d.St = (2.0 / 9.0) * aL * aL * Re;
    d.mu = d.R / d.St;
    d.eps = d.St / d.R;
    d.delta_p = p.rho_p / p.rho_f;
    d.delta_a = p.rho_a / p.rho_f;
    d.wind_drag = p.nu_a * p.alpha * d.T / (L * L);
    return d;
}

double coriolis_parameter(double lat_deg) {
    return 2.0 * kEarthRotation * std::sin(lat_deg * kDegToRad);
}

Vec2 reduced_mr_velocity(const FlowSample& s, const DrifterParams& p, const HTerm& H) {
    if (p.eps == 0.0) return s.u;
    Vec2 bracket = (1.5 * p.R - 1.0) * s.dudt - (p.R * s.f * (p.delta_p - 1.0)) * perp(s.u);
    if (H) bracket += H(s.u_e, s.u);
    return s.u + p.eps * bracket;
}

Vec2 full_mr_acceleration(const Vec2& v, const FlowSample& s, const DrifterParams& p,
                          const HTerm& H) {
    if (!(p.eps > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "full system needs eps > 0");
    }
    Vec2 a = (s.u - v) / p.eps + (1.5 * p.R) * s.dudt -
             (p.R * s.f) * perp(p.delta_p * v - s.u) -
             (p.R * p.delta_a * p.wind_drag) * (v - s.u_wind);
    if (H) a += H(s.u_e, s.u);
    return a;
}

FullState full_mr_rhs(const FullState& state, double t, const FlowContext& flow,
                      const DrifterParams& p, const HTerm& H) {
    const FlowSample s = flow(state.x, t);
    return {state.v, full_mr_acceleration(state.v, s, p, H)};
}

FullState full_mr_rk4_step(const FullState& state, double t, double dt, const FlowContext& flow,
                           const DrifterParams& p, const HTerm& H) {
    auto shifted = [](const FullState& s, const FullState& d, double h) {
        return FullState{s.x + h * d.x, s.v + h * d.v};
    };
    const FullState k1 = full_mr_rhs(state, t, flow, p, H);
    const FullState k2 = full_mr_rhs(shifted(state, k1, dt / 2), t + dt / 2, flow, p, H);
    const FullState k3 = full_mr_rhs(shifted(state, k2, dt / 2), t + dt / 2, flow, p, H);
    const FullState k4 = full_mr_rhs(shifted(state, k3, dt), t + dt, flow, p, H);
    return {state.x + (dt / 6) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            state.v + (dt / 6) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

FlowSample to_scaled(const FlowSample& si, const DrifterParams& p) {
    const double inv_u = 1.0 / p.U;
    const double acc = p.T / p.U;
    return {si.u * inv_u, si.dudt * acc, si.u_e * inv_u, si.u_wind * inv_u, si.f * p.T};
}

Vec2 reduced_mr_velocity_si(const FlowSample& si, const DrifterParams& p, const HTerm& H) {
    return reduced_mr_velocity(to_scaled(si, p), p, H) * p.U;
}

Vec2 full_mr_acceleration_si(const Vec2& v, const FlowSample& si, const DrifterParams& p,
                             const HTerm& H) {
    return full_mr_acceleration(v / p.U, to_scaled(si, p), p, H) * (p.U / p.T);
}

}  // namespace lagdrift::dynamics
