// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/geo.hpp"

#include <functional>

namespace lagdrift::dynamics {

/// Dimensional drifter and fluid properties (SI).
struct PhysicalDrifterParams {
    double rho_p = 1025.0;  // drifter density, kg/m^3
    double rho_f = 1025.0;  // water density
    double rho_a = 1.2;     // air density
    double nu_f = 1.0e-6;   // water kinematic viscosity, m^2/s
    double nu_a = 1.5e-5;   // air kinematic viscosity
    double a = 0.05;        // drogue radius, m
    double alpha = 1.0;     // float drag coefficient
    double g = 9.81;        // not used in the horizontal equations
};

/// Nondimensional groups of the drifter equations plus the scales that produced them.
///
/// R = 2 rho_f / (rho_f + 2 rho_p), St = (2/9)(a/L)^2 Re, mu = R/St, eps = 1/mu.
/// `wind_drag` is nu_a * alpha * T / L^2 (the float drag rate in units of 1/T).
struct DrifterParams {
    double R = 2.0 / 3.0;
    double St = 0.0;
    double mu = 0.0;
    double eps = 0.0;
    double delta_p = 1.0;
    double delta_a = 0.0;
    double wind_drag = 0.0;
    double L = 1.0;  // m
    double U = 1.0;  // m/s
    double T = 1.0;  // s, L/U

    /// Drag relaxation time eps * T in seconds.
    double relaxation_time() const { return eps * T; }
};

DrifterParams nondimensionalize(const PhysicalDrifterParams& p, double L, double U);

/// f = 2 Omega sin(lat), signed, 1/s.
double coriolis_parameter(double lat_deg);

/// Flow quantities seen by a drifter at one point. All members share one unit
/// system: either SI or scaled by (L, U, T).
struct FlowSample {
    Vec2 u;
    Vec2 dudt;
    Vec2 u_e;
    Vec2 u_wind;
    double f = 0.0;  // Coriolis parameter
};

/// Unresolved wind-wave / shear term H(u_e, u) in scaled units. An empty function is zero.
using HTerm = std::function<Vec2(const Vec2& u_e, const Vec2& u)>;

/// Leading-order slow-manifold velocity (scaled units):
///   u + eps [ (3R/2 - 1) Du/Dt - R f (delta_p - 1) u_perp + H(u_e, u) ].
Vec2 reduced_mr_velocity(const FlowSample& s, const DrifterParams& p, const HTerm& H = {});

/// Drifter acceleration of the full (unreduced) system, scaled units:
///   (u - v)/eps + (3R/2) Du/Dt - R f (delta_p v - u)_perp
///     - R delta_a wind_drag (v - u_wind) + H(u_e, u).
/// Rejects eps <= 0.
Vec2 full_mr_acceleration(const Vec2& v, const FlowSample& s, const DrifterParams& p,
                          const HTerm& H = {});

struct FullState {
    Vec2 x;  // position
    Vec2 v;  // drifter velocity
};

using FlowContext = std::function<FlowSample(const Vec2& x, double t)>;

/// (x', v') of the full system; `flow` must return scaled quantities.
FullState full_mr_rhs(const FullState& state, double t, const FlowContext& flow,
                      const DrifterParams& p, const HTerm& H = {});

/// One classical RK4 step of the full system.
FullState full_mr_rk4_step(const FullState& state, double t, double dt, const FlowContext& flow,
                           const DrifterParams& p, const HTerm& H = {});

/// SI sample -> scaled sample.
FlowSample to_scaled(const FlowSample& si, const DrifterParams& p);

/// Reduced velocity from an SI sample, returned in m/s. H stays in scaled units.
Vec2 reduced_mr_velocity_si(const FlowSample& si, const DrifterParams& p, const HTerm& H = {});
/// Full-system acceleration in m/s^2 from SI velocity and sample.
Vec2 full_mr_acceleration_si(const Vec2& v, const FlowSample& si, const DrifterParams& p,
                             const HTerm& H = {});

}  // namespace lagdrift::dynamics
