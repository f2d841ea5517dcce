// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/flowfield.hpp"
#include "lagdrift/geo.hpp"

#include <variant>

namespace lagdrift::flowfield {

/// u = omega * (-y, x) about the origin.
struct SolidRotation {
    double omega = 1.0;  // rad/s
};

/// Time-periodic double gyre on [0, 2*scale] x [0, scale] (Shadden et al. form).
struct DoubleGyre {
    double amplitude = 0.1;  // A, m/s
    double eps_g = 0.25;
    double omega = 0.2 * std::numbers::pi;  // rad/s
    double scale = 1.0;                     // m per unit of the nondimensional domain
};

struct UniformStream {
    Vec2 c;
};

using AnalyticField = std::variant<SolidRotation, DoubleGyre, UniformStream>;

struct AnalyticSample {
    Vec2 velocity;
    Vec2 material_derivative;
};

/// Closed-form value, time derivative and gradient at local coordinates x (m).
FieldJet analytic_jet(const AnalyticField& field, const Vec2& x, double t);

inline AnalyticSample analytic_sample(const AnalyticField& field, const Vec2& x, double t) {
    const FieldJet j = analytic_jet(field, x, t);
    return {j.value, material_derivative(j)};
}

}  // namespace lagdrift::flowfield
