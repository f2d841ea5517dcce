// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>

namespace lagdrift {

/// Mean Earth radius used for all metric conversions (m).
inline constexpr double kEarthRadius = 6371000.0;
/// Earth rotation rate (rad/s).
inline constexpr double kEarthRotation = 7.2921159e-5;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
/// Length of one degree of latitude (m).
inline constexpr double kMetersPerDegree = kDegToRad * kEarthRadius;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    double norm() const { return std::hypot(x, y); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// 90 degree counterclockwise rotation, (-y, x).
constexpr Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3D cross product a x b.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// Row-major 2x2 matrix; for velocity gradients, row i holds d(u_i)/d(x, y).
struct Mat2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
        return {m.xx * v.x + m.xy * v.y, m.yx * v.x + m.yy * v.y};
    }
    friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy};
    }
    friend constexpr Mat2 operator*(double s, const Mat2& m) {
        return {s * m.xx, s * m.xy, s * m.yx, s * m.yy};
    }
};

struct GeoPoint {
    double lon = 0.0;  // degrees east
    double lat = 0.0;  // degrees north

    friend constexpr bool operator==(const GeoPoint&, const GeoPoint&) = default;
    bool finite() const { return std::isfinite(lon) && std::isfinite(lat); }
};

/// Meters per degree of longitude at the given latitude (local equirectangular metric).
inline double meters_per_degree_lon(double lat_deg) {
    return kMetersPerDegree * std::cos(lat_deg * kDegToRad);
}

/// Converts an east/north velocity (m/s) into degree rates at `lat_deg`.
inline GeoPoint velocity_to_degree_rate(const Vec2& v, double lat_deg) {
    return {v.x / meters_per_degree_lon(lat_deg), v.y / kMetersPerDegree};
}

/// Great-circle distance (m) via the haversine formula.
double haversine(const GeoPoint& a, const GeoPoint& b);

/// Fixed equirectangular tangent frame anchored at `origin`; x east, y north, meters.
/// Longitude scaling uses the origin latitude so the mapping is affine.
class LocalFrame {
  public:
    LocalFrame() = default;
    explicit LocalFrame(GeoPoint origin)
        : origin_(origin), mx_(lagdrift::meters_per_degree_lon(origin.lat)) {}

    Vec2 to_local(const GeoPoint& p) const {
        return {(p.lon - origin_.lon) * mx_, (p.lat - origin_.lat) * kMetersPerDegree};
    }
    GeoPoint to_geo(const Vec2& x) const {
        return {origin_.lon + x.x / mx_, origin_.lat + x.y / kMetersPerDegree};
    }
    const GeoPoint& origin() const { return origin_; }
    double meters_per_degree_lon() const { return mx_; }

  private:
    GeoPoint origin_{};
    double mx_ = kMetersPerDegree;
};

}  // namespace lagdrift
