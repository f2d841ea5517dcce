// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/analytic.hpp"

#include <cmath>

namespace lagdrift::flowfield {

namespace {

FieldJet jet_of(const SolidRotation& f, const Vec2& x, double) {
    FieldJet j;
    j.value = {-f.omega * x.y, f.omega * x.x};
    j.grad = {0.0, -f.omega, f.omega, 0.0};
    return j;
}

FieldJet jet_of(const UniformStream& f, const Vec2&, double) {
    FieldJet j;
    j.value = f.c;
    return j;
}

// psi = A s sin(pi F(xi, t)) sin(pi eta), F = a xi^2 + b xi,
// a = eps sin(wt), b = 1 - 2 eps sin(wt).
FieldJet jet_of(const DoubleGyre& g, const Vec2& x, double t) {
    constexpr double pi = std::numbers::pi;
    const double xi = x.x / g.scale;
    const double eta = x.y / g.scale;
    const double sw = std::sin(g.omega * t), cw = std::cos(g.omega * t);
    const double a = g.eps_g * sw, b = 1.0 - 2.0 * g.eps_g * sw;
    const double da = g.eps_g * g.omega * cw, db = -2.0 * g.eps_g * g.omega * cw;

    const double F = a * xi * xi + b * xi;
    const double Fx = 2.0 * a * xi + b;
    const double Fxx = 2.0 * a;
    const double Ft = da * xi * xi + db * xi;
    const double Fxt = 2.0 * da * xi + db;

    const double sF = std::sin(pi * F), cF = std::cos(pi * F);
    const double sE = std::sin(pi * eta), cE = std::cos(pi * eta);
    const double A = g.amplitude;

    FieldJet j;
    j.value = {-pi * A * sF * cE, pi * A * cF * sE * Fx};
    j.grad.xx = -pi * pi * A * cF * Fx * cE / g.scale;
    j.grad.xy = pi * pi * A * sF * sE / g.scale;
    j.grad.yx = pi * A * sE * (-pi * sF * Fx * Fx + cF * Fxx) / g.scale;
    j.grad.yy = pi * pi * A * cF * cE * Fx / g.scale;
    j.d_dt = {-pi * pi * A * cF * Ft * cE, pi * A * sE * (-pi * sF * Ft * Fx + cF * Fxt)};
    return j;
}

}  // namespace

FieldJet analytic_jet(const AnalyticField& field, const Vec2& x, double t) {
    return std::visit([&](const auto& f) { return jet_of(f, x, t); }, field);
}

}  // namespace lagdrift::flowfield
