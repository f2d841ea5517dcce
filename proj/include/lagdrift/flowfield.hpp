// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/geo.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lagdrift::flowfield {

/// Uniform lon/lat/time grid. Times are seconds since the Unix epoch.
struct GridSpec {
    double lon0 = 0.0;
    double lat0 = 0.0;
    double dlon = 0.25;
    double dlat = 0.25;
    int nlon = 4;
    int nlat = 4;
    double t0 = 0.0;
    double dt = 86400.0;
    int nt = 2;

    double lon_at(int i) const { return lon0 + i * dlon; }
    double lat_at(int j) const { return lat0 + j * dlat; }
    double time_at(int k) const { return t0 + k * dt; }
    double lon_max() const { return lon_at(nlon - 1); }
    double lat_max() const { return lat_at(nlat - 1); }
    double t_max() const { return time_at(nt - 1); }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(nlon) * static_cast<std::size_t>(nlat) *
               static_cast<std::size_t>(nt);
    }
    /// Throws Error(InvalidArgument / NonMonotoneAxes) when the spec is unusable.
    void validate() const;
};

/// 2D surface velocity on a GridSpec, stored time-major then lat then lon.
/// A cell is usable when `valid(k, j, i)`; masked cells may hold anything.
class GriddedVelocityField {
  public:
    GriddedVelocityField() = default;
    GriddedVelocityField(GridSpec spec, std::vector<double> u, std::vector<double> v,
                         std::vector<std::uint8_t> valid);

    const GridSpec& spec() const { return spec_; }
    std::size_t index(int k, int j, int i) const {
        return (static_cast<std::size_t>(k) * spec_.nlat + j) * spec_.nlon + i;
    }
    Vec2 at(int k, int j, int i) const {
        const auto n = index(k, j, i);
        return {u_[n], v_[n]};
    }
    bool valid(int k, int j, int i) const { return valid_[index(k, j, i)] != 0; }
    std::size_t unmasked_count() const;

    const std::vector<double>& u() const { return u_; }
    const std::vector<double>& v() const { return v_; }

    bool contains(double lon, double lat, double t) const;

  private:
    GridSpec spec_{};
    std::vector<double> u_;
    std::vector<double> v_;
    std::vector<std::uint8_t> valid_;
};

/// Value, time derivative and spatial gradient (per meter) of a velocity field at a point.
/// `grad` row i holds d(u_i)/dx, d(u_i)/dy with x east and y north.
struct FieldJet {
    Vec2 value;
    Vec2 d_dt;
    Mat2 grad;
    bool fallback_used = false;
};

/// Du/Dt = du/dt + (u . grad) u.
inline Vec2 material_derivative(const FieldJet& jet) { return jet.d_dt + jet.grad * jet.value; }

struct SampleOptions {
    /// Replace masked stencil values by the nearest unmasked node in the same time slice
    /// instead of failing with MaskedSupport.
    bool mask_fallback = false;
};

struct VelocitySample {
    Vec2 velocity;
    bool fallback_used = false;
};

/// Catmull-Rom cubic in lon/lat, linear in time. Reproduces node values exactly;
/// outside the lon/lat edges the stencil is closed by linear extrapolation.
VelocitySample sample_velocity_checked(const GriddedVelocityField& field, double lon, double lat,
                                       double t, const SampleOptions& opts = {});
inline Vec2 sample_velocity(const GriddedVelocityField& field, double lon, double lat, double t,
                            const SampleOptions& opts = {}) {
    return sample_velocity_checked(field, lon, lat, t, opts).velocity;
}

/// Interpolant value plus analytic derivatives. Requires a one-cell margin from the
/// lon/lat edges (InsufficientMargin otherwise).
FieldJet sample_jet(const GriddedVelocityField& field, double lon, double lat, double t,
                    const SampleOptions& opts = {});

/// Du/Dt of the interpolant, m/s^2.
Vec2 material_derivative(const GriddedVelocityField& field, double lon, double lat, double t,
                         const SampleOptions& opts = {});

/// Ekman surface drift from 10 m wind: 0.0127/sqrt(sin|lat|) times the wind rotated 45
/// degrees to the right (north) or left (south). |lat| < 2 raises EquatorialBand.
Vec2 ekman_velocity(const Vec2& wind10, double lat);
inline constexpr double kEkmanCoefficient = 0.0127;
inline constexpr double kEquatorialGuardDeg = 2.0;

/// Jet of the Ekman velocity given the wind jet at latitude `lat` (includes the
/// latitude dependence of the magnitude factor).
FieldJet ekman_jet(const FieldJet& wind, double lat);

/// u = u_g + u_e at a point.
Vec2 total_surface_velocity(const GriddedVelocityField& current, const GriddedVelocityField& wind,
                            double lon, double lat, double t, const SampleOptions& opts = {});

/// Everything the drifter models need at one point, in SI units.
struct SurfaceFlow {
    Vec2 u;       // total surface current
    Vec2 u_e;     // Ekman part
    Vec2 u_wind;  // 10 m wind
    Vec2 dudt;    // material derivative of the total current
    bool fallback_used = false;
};

SurfaceFlow sample_surface_flow(const GriddedVelocityField& current,
                                const GriddedVelocityField& wind, double lon, double lat, double t,
                                const SampleOptions& opts = {});
/// Combines a geostrophic jet and a wind jet at `lat` into a SurfaceFlow.
SurfaceFlow combine_surface_flow(const FieldJet& current, const FieldJet& wind, double lat);

/// Fills a field by evaluating `fn(lon, lat, t)` at every node; all cells unmasked.
GriddedVelocityField make_field(const GridSpec& spec,
                                const std::function<Vec2(double, double, double)>& fn);

/// Reads a field from its JSON header (see README for the format).
GriddedVelocityField load_field(const std::string& header_path);
/// Writes `<stem>.json` plus `<stem>_u.csv` / `<stem>_v.csv`; masked cells get `fill_value`.
void save_field(const GriddedVelocityField& field, const std::string& stem,
                double fill_value = -9999.0);

}  // namespace lagdrift::flowfield
