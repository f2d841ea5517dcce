// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/flowfield.hpp"

#include "lagdrift/error.hpp"
#include "lagdrift/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace lagdrift::flowfield {

namespace {

using Json = nlohmann::json;

std::string describe(double lon, double lat, double t) {
    std::ostringstream ss;
    ss << "(lon=" << lon << ", lat=" << lat << ", t=" << t << ")";
    return ss.str();
}

// Catmull-Rom weights for the four nodes around fractional offset s in [0, 1].
std::array<double, 4> cr_weights(double s) {
    const double s2 = s * s, s3 = s2 * s;
    return {0.5 * (-s3 + 2.0 * s2 - s), 0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
            0.5 * (-3.0 * s3 + 4.0 * s2 + s), 0.5 * (s3 - s2)};
}

std::array<double, 4> cr_weight_derivs(double s) {
    const double s2 = s * s;
    return {0.5 * (-3.0 * s2 + 4.0 * s - 1.0), 0.5 * (9.0 * s2 - 10.0 * s),
            0.5 * (-9.0 * s2 + 8.0 * s + 1.0), 0.5 * (3.0 * s2 - 2.0 * s)};
}

struct AxisPos {
    int base;  // index of the node at s = 0
    double s;
};

// Locates `x` on an axis of n nodes. With `margin`, the full 4-node stencil must be
// inside the axis.
AxisPos locate(double frac, int n, bool margin) {
    if (margin) {
        int b = static_cast<int>(std::floor(frac));
        b = std::clamp(b, 1, n - 3);
        return {b, frac - b};
    }
    int b = static_cast<int>(std::floor(frac));
    b = std::clamp(b, 0, n - 2);
    return {b, frac - b};
}

class StencilReader {
  public:
    StencilReader(const GriddedVelocityField& f, const SampleOptions& opts) : f_(f), opts_(opts) {}

    // Node value with linear-extrapolation ghosts beyond the lon/lat edges.
    Vec2 node(int k, int j, int i) {
        const auto& s = f_.spec();
        if (i < 0) return 2.0 * node(k, j, 0) - node(k, j, 1);
        if (i >= s.nlon) return 2.0 * node(k, j, s.nlon - 1) - node(k, j, s.nlon - 2);
        if (j < 0) return 2.0 * node(k, 0, i) - node(k, 1, i);
        if (j >= s.nlat) return 2.0 * node(k, s.nlat - 1, i) - node(k, s.nlat - 2, i);
        if (f_.valid(k, j, i)) return f_.at(k, j, i);
        if (!opts_.mask_fallback) {
            throw Error(ErrorCode::MaskedSupport,
                        "stencil touches masked cell (k=" + std::to_string(k) +
                            ", j=" + std::to_string(j) + ", i=" + std::to_string(i) + ")");
        }
        fallback_used = true;
        return nearest_valid(k, j, i);
    }

    bool fallback_used = false;

  private:
    Vec2 nearest_valid(int k, int j, int i) const {
        const auto& s = f_.spec();
        const int max_ring = std::max(s.nlon, s.nlat);
        for (int ring = 1; ring <= max_ring; ++ring) {
            long best_d2 = std::numeric_limits<long>::max();
            Vec2 best{};
            for (int dj = -ring; dj <= ring; ++dj) {
                for (int di = -ring; di <= ring; ++di) {
                    if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
                    const int jj = j + dj, ii = i + di;
                    if (jj < 0 || jj >= s.nlat || ii < 0 || ii >= s.nlon) continue;
                    if (!f_.valid(k, jj, ii)) continue;
                    const long d2 = long(di) * di + long(dj) * dj;
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best = f_.at(k, jj, ii);
                    }
                }
            }
            if (best_d2 != std::numeric_limits<long>::max()) return best;
        }
        throw Error(ErrorCode::MaskedSupport, "time slice has no unmasked cells");
    }

    const GriddedVelocityField& f_;
    const SampleOptions& opts_;
};

struct SliceJet {
    Vec2 value;
    Vec2 d_dlon;  // per grid index
    Vec2 d_dlat;
};

SliceJet eval_slice(StencilReader& reader, int k, const AxisPos& px, const AxisPos& py,
                    bool derivs) {
    const auto wx = cr_weights(px.s);
    const auto wy = cr_weights(py.s);
    std::array<double, 4> dwx{}, dwy{};
    if (derivs) {
        dwx = cr_weight_derivs(px.s);
        dwy = cr_weight_derivs(py.s);
    }
    SliceJet out;
    for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
            const Vec2 n = reader.node(k, py.base - 1 + b, px.base - 1 + a);
            out.value += (wx[a] * wy[b]) * n;
            if (derivs) {
                out.d_dlon += (dwx[a] * wy[b]) * n;
                out.d_dlat += (wx[a] * dwy[b]) * n;
            }
        }
    }
    return out;
}

struct TimePos {
    int k;
    double s;
};

TimePos locate_time(const GridSpec& spec, double t) {
    const double frac = (t - spec.t0) / spec.dt;
    int k = static_cast<int>(std::floor(frac));
    k = std::clamp(k, 0, spec.nt - 2);
    return {k, frac - k};
}

void require_inside(const GriddedVelocityField& field, double lon, double lat, double t) {
    if (!field.contains(lon, lat, t)) {
        throw Error(ErrorCode::OutOfDomain, "query outside grid " + describe(lon, lat, t));
    }
}

}  // namespace

void GridSpec::validate() const {
    if (nlon < 4 || nlat < 4) {
        throw Error(ErrorCode::InvalidArgument, "grid needs at least 4 nodes per spatial axis");
    }
    if (nt < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 time slices");
    if (!(dlon > 0.0) || !(dlat > 0.0) || !(dt > 0.0)) {
        throw Error(ErrorCode::NonMonotoneAxes, "grid spacings must be positive");
    }
    if (!(lat0 > -90.0) || !(lat_max() < 90.0)) {
        throw Error(ErrorCode::InvalidArgument, "latitudes must lie in (-90, 90)");
    }
}

GriddedVelocityField::GriddedVelocityField(GridSpec spec, std::vector<double> u,
                                           std::vector<double> v, std::vector<std::uint8_t> valid)
    : spec_(spec), u_(std::move(u)), v_(std::move(v)), valid_(std::move(valid)) {
    spec_.validate();
    const auto n = spec_.cell_count();
    if (u_.size() != n || v_.size() != n || valid_.size() != n) {
        throw Error(ErrorCode::SizeMismatch, "field arrays do not match grid size");
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (valid_[c] && !(std::isfinite(u_[c]) && std::isfinite(v_[c]))) valid_[c] = 0;
    }
}

std::size_t GriddedVelocityField::unmasked_count() const {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

bool GriddedVelocityField::contains(double lon, double lat, double t) const {
    const auto& s = spec_;
    return lon >= s.lon0 && lon <= s.lon_max() && lat >= s.lat0 && lat <= s.lat_max() &&
           t >= s.t0 && t <= s.t_max();
}

VelocitySample sample_velocity_checked(const GriddedVelocityField& field, double lon, double lat,
                                       double t, const SampleOptions& opts) {
    require_inside(field, lon, lat, t);
    const auto& s = field.spec();
    const AxisPos px = locate((lon - s.lon0) / s.dlon, s.nlon, false);
    const AxisPos py = locate((lat - s.lat0) / s.dlat, s.nlat, false);
    const TimePos pt = locate_time(s, t);
    StencilReader reader(field, opts);
    const SliceJet a = eval_slice(reader, pt.k, px, py, false);
    const SliceJet b = eval_slice(reader, pt.k + 1, px, py, false);
    return {(1.0 - pt.s) * a.value + pt.s * b.value, reader.fallback_used};
}

FieldJet sample_jet(const GriddedVelocityField& field, double lon, double lat, double t,
                    const SampleOptions& opts) {
    require_inside(field, lon, lat, t);
    const auto& s = field.spec();
    const double fx = (lon - s.lon0) / s.dlon;
    const double fy = (lat - s.lat0) / s.dlat;
    if (fx < 1.0 || fx > s.nlon - 2.0 || fy < 1.0 || fy > s.nlat - 2.0) {
        throw Error(ErrorCode::InsufficientMargin,
                    "derivatives need one grid cell of margin " + describe(lon, lat, t));
    }
    const AxisPos px = locate(fx, s.nlon, true);
    const AxisPos py = locate(fy, s.nlat, true);
    const TimePos pt = locate_time(s, t);
    StencilReader reader(field, opts);
    const SliceJet a = eval_slice(reader, pt.k, px, py, true);
    const SliceJet b = eval_slice(reader, pt.k + 1, px, py, true);

    const double wa = 1.0 - pt.s, wb = pt.s;
    const double to_x = 1.0 / (s.dlon * meters_per_degree_lon(lat));
    const double to_y = 1.0 / (s.dlat * kMetersPerDegree);
    const Vec2 ddx = (wa * a.d_dlon + wb * b.d_dlon) * to_x;
    const Vec2 ddy = (wa * a.d_dlat + wb * b.d_dlat) * to_y;

    FieldJet jet;
    jet.value = wa * a.value + wb * b.value;
    jet.d_dt = (b.value - a.value) / s.dt;
    jet.grad = {ddx.x, ddy.x, ddx.y, ddy.y};
    jet.fallback_used = reader.fallback_used;
    return jet;
}

Vec2 material_derivative(const GriddedVelocityField& field, double lon, double lat, double t,
                         const SampleOptions& opts) {
    return material_derivative(sample_jet(field, lon, lat, t, opts));
}

namespace {

double ekman_factor(double lat) {
    if (!std::isfinite(lat) || std::abs(lat) < kEquatorialGuardDeg) {
        throw Error(ErrorCode::EquatorialBand,
                    "Ekman drift undefined within 2 degrees of the equator (lat=" +
                        std::to_string(lat) + ")");
    }
    return kEkmanCoefficient / std::sqrt(std::sin(std::abs(lat) * kDegToRad));
}

// 45 degree rotation: clockwise in the north, counterclockwise in the south.
Vec2 ekman_rotate(const Vec2& w, double lat) {
    const double c = std::numbers::sqrt2 / 2.0;
    const double sgn = lat > 0.0 ? -1.0 : 1.0;
    return {c * w.x - sgn * c * w.y, sgn * c * w.x + c * w.y};
}

}  // namespace

Vec2 ekman_velocity(const Vec2& wind10, double lat) {
    const double k = ekman_factor(lat);
    if (!wind10.finite()) throw Error(ErrorCode::InvalidArgument, "wind must be finite");
    return k * ekman_rotate(wind10, lat);
}

FieldJet ekman_jet(const FieldJet& wind, double lat) {
    const double k = ekman_factor(lat);
    const double sign = lat > 0.0 ? 1.0 : -1.0;
    const double phi = std::abs(lat) * kDegToRad;
    // dk/dy in 1/m
    const double dk_dy = -0.5 * kEkmanCoefficient * std::cos(phi) /
                         std::pow(std::sin(phi), 1.5) * sign * kDegToRad / kMetersPerDegree;
    const Vec2 rw = ekman_rotate(wind.value, lat);
    const Vec2 gx = ekman_rotate({wind.grad.xx, wind.grad.yx}, lat);  // d/dx column
    const Vec2 gy = ekman_rotate({wind.grad.xy, wind.grad.yy}, lat);  // d/dy column

    FieldJet out;
    out.value = k * rw;
    out.d_dt = k * ekman_rotate(wind.d_dt, lat);
    out.grad = {k * gx.x, k * gy.x + dk_dy * rw.x, k * gx.y, k * gy.y + dk_dy * rw.y};
    out.fallback_used = wind.fallback_used;
    return out;
}

Vec2 total_surface_velocity(const GriddedVelocityField& current, const GriddedVelocityField& wind,
                            double lon, double lat, double t, const SampleOptions& opts) {
    return sample_velocity(current, lon, lat, t, opts) +
           ekman_velocity(sample_velocity(wind, lon, lat, t, opts), lat);
}

SurfaceFlow combine_surface_flow(const FieldJet& current, const FieldJet& wind, double lat) {
    const FieldJet ek = ekman_jet(wind, lat);
    FieldJet total;
    total.value = current.value + ek.value;
    total.d_dt = current.d_dt + ek.d_dt;
    total.grad = current.grad + ek.grad;
    SurfaceFlow out;
    out.u = total.value;
    out.u_e = ek.value;
    out.u_wind = wind.value;
    out.dudt = material_derivative(total);
    out.fallback_used = current.fallback_used || wind.fallback_used;
    return out;
}

SurfaceFlow sample_surface_flow(const GriddedVelocityField& current,
                                const GriddedVelocityField& wind, double lon, double lat, double t,
                                const SampleOptions& opts) {
    return combine_surface_flow(sample_jet(current, lon, lat, t, opts),
                                sample_jet(wind, lon, lat, t, opts), lat);
}

GriddedVelocityField make_field(const GridSpec& spec,
                                const std::function<Vec2(double, double, double)>& fn) {
    spec.validate();
    const auto n = spec.cell_count();
    std::vector<double> u(n), v(n);
    std::vector<std::uint8_t> valid(n, 1);
    std::size_t c = 0;
    for (int k = 0; k < spec.nt; ++k) {
        for (int j = 0; j < spec.nlat; ++j) {
            for (int i = 0; i < spec.nlon; ++i, ++c) {
                const Vec2 w = fn(spec.lon_at(i), spec.lat_at(j), spec.time_at(k));
                u[c] = w.x;
                v[c] = w.y;
            }
        }
    }
    return GriddedVelocityField(spec, std::move(u), std::move(v), std::move(valid));
}

// ---------------------------------------------------------------------------
// File format

namespace {

// Checks an explicit axis for monotonicity and uniform spacing; returns (start, step).
std::pair<double, double> axis_from_values(const Json& arr, const char* name) {
    if (!arr.is_array() || arr.size() < 2) {
        throw Error(ErrorCode::MalformedHeader, std::string("axis '") + name + "' must be an array");
    }
    std::vector<double> x;
    for (const auto& e : arr) {
        if (!e.is_number()) {
            throw Error(ErrorCode::MalformedHeader, std::string("axis '") + name + "' not numeric");
        }
        x.push_back(e.get<double>());
    }
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) {
            throw Error(ErrorCode::NonMonotoneAxes,
                        std::string("axis '") + name + "' is not strictly increasing");
        }
    }
    const double step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double expected = x.front() + step * static_cast<double>(i);
        if (std::abs(x[i] - expected) > 1e-6 * std::max(1.0, std::abs(step))) {
            throw Error(ErrorCode::NonUniformGrid, std::string("axis '") + name + "' is not uniform");
        }
    }
    return {x.front(), step};
}

GridSpec grid_from_header(const Json& h) {
    GridSpec g;
    if (h.contains("grid")) {
        const auto& j = h.at("grid");
        g.lon0 = j.at("lon0").get<double>();
        g.lat0 = j.at("lat0").get<double>();
        g.dlon = j.at("dlon").get<double>();
        g.dlat = j.at("dlat").get<double>();
        g.nlon = j.at("nlon").get<int>();
        g.nlat = j.at("nlat").get<int>();
        g.t0 = j.at("t0").get<double>();
        g.dt = j.at("dt").get<double>();
        g.nt = j.at("nt").get<int>();
    } else if (h.contains("axes")) {
        const auto& a = h.at("axes");
        std::tie(g.lon0, g.dlon) = axis_from_values(a.at("lon"), "lon");
        std::tie(g.lat0, g.dlat) = axis_from_values(a.at("lat"), "lat");
        std::tie(g.t0, g.dt) = axis_from_values(a.at("time"), "time");
        g.nlon = static_cast<int>(a.at("lon").size());
        g.nlat = static_cast<int>(a.at("lat").size());
        g.nt = static_cast<int>(a.at("time").size());
    } else {
        throw Error(ErrorCode::MalformedHeader, "header has neither 'grid' nor 'axes'");
    }
    try {
        g.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NonMonotoneAxes) throw;
        throw Error(ErrorCode::MalformedHeader, e.what());
    }
    return g;
}

std::vector<double> read_variable_csv(const std::string& path, const GridSpec& g,
                                      double fill_value) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::SizeMismatch, "'" + path + "' is empty");
    const auto cols = split_csv_line(line);
    const std::vector<std::string> expected{"time_index", "lat_index", "lon_index", "value"};
    if (cols != expected) {
        throw Error(ErrorCode::MalformedHeader,
                    "'" + path + "' must have columns time_index,lat_index,lon_index,value");
    }
    const auto n = g.cell_count();
    std::vector<double> values(n, std::nan(""));
    std::vector<std::uint8_t> seen(n, 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw Error(ErrorCode::ParseError, "bad row in '" + path + "': " + line);
        const long long k = parse_int(f[0]), j = parse_int(f[1]), i = parse_int(f[2]);
        if (k < 0 || k >= g.nt || j < 0 || j >= g.nlat || i < 0 || i >= g.nlon) {
            throw Error(ErrorCode::SizeMismatch, "index out of declared grid in '" + path + "'");
        }
        const auto c = (static_cast<std::size_t>(k) * g.nlat + j) * g.nlon + i;
        if (seen[c]) throw Error(ErrorCode::SizeMismatch, "duplicate cell in '" + path + "'");
        seen[c] = 1;
        double v = parse_double(f[3]);
        if (v == fill_value) v = std::nan("");
        values[c] = v;
        ++rows;
    }
    if (rows != n) {
        throw Error(ErrorCode::SizeMismatch, "'" + path + "' has " + std::to_string(rows) +
                                                 " cells, header declares " + std::to_string(n));
    }
    return values;
}

}  // namespace

GriddedVelocityField load_field(const std::string& header_path) {
    Json h;
    try {
        h = Json::parse(read_text_file(header_path));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, "'" + header_path + "': " + e.what());
    }
    GridSpec g;
    double fill = -9999.0;
    std::string u_file, v_file;
    try {
        g = grid_from_header(h);
        if (h.contains("fill_value")) fill = h.at("fill_value").get<double>();
        const auto& vars = h.at("variables");
        u_file = vars.at("u").at("file").get<std::string>();
        v_file = vars.at("v").at("file").get<std::string>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, "'" + header_path + "': " + e.what());
    }
    const auto dir = std::filesystem::path(header_path).parent_path();
    auto u = read_variable_csv((dir / u_file).string(), g, fill);
    auto v = read_variable_csv((dir / v_file).string(), g, fill);
    std::vector<std::uint8_t> valid(u.size());
    for (std::size_t c = 0; c < u.size(); ++c) {
        valid[c] = std::isfinite(u[c]) && std::isfinite(v[c]) ? 1 : 0;
    }
    return GriddedVelocityField(g, std::move(u), std::move(v), std::move(valid));
}

void save_field(const GriddedVelocityField& field, const std::string& stem, double fill_value) {
    const auto& g = field.spec();
    const std::filesystem::path base(stem);
    const std::string name = base.filename().string();
    Json h;
    h["format"] = "lagdrift-field";
    h["version"] = 1;
    h["grid"] = {{"lon0", g.lon0}, {"lat0", g.lat0}, {"dlon", g.dlon}, {"dlat", g.dlat},
                 {"nlon", g.nlon}, {"nlat", g.nlat}, {"t0", g.t0},     {"dt", g.dt},
                 {"nt", g.nt}};
    h["variables"] = {{"u", {{"file", name + "_u.csv"}, {"units", "m/s"}}},
                      {"v", {{"file", name + "_v.csv"}, {"units", "m/s"}}}};
    h["fill_value"] = fill_value;
    write_text_file(stem + ".json", h.dump(2) + "\n");

    for (int comp = 0; comp < 2; ++comp) {
        std::string body = "time_index,lat_index,lon_index,value\n";
        const auto& data = comp == 0 ? field.u() : field.v();
        for (int k = 0; k < g.nt; ++k) {
            for (int j = 0; j < g.nlat; ++j) {
                for (int i = 0; i < g.nlon; ++i) {
                    const auto c = field.index(k, j, i);
                    const double val = field.valid(k, j, i) ? data[c] : fill_value;
                    body += std::to_string(k) + ',' + std::to_string(j) + ',' +
                            std::to_string(i) + ',' + format_double(val) + '\n';
                }
            }
        }
        write_text_file(stem + (comp == 0 ? "_u.csv" : "_v.csv"), body);
    }
}

}  // namespace lagdrift::flowfield
