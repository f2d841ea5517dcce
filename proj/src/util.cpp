// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/util.hpp"

#include "lagdrift/error.hpp"
#include "lagdrift/geo.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lagdrift {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::ConfigError: return "config error";
        case ErrorCode::MalformedHeader: return "malformed header";
        case ErrorCode::NonMonotoneAxes: return "non-monotone axes";
        case ErrorCode::NonUniformGrid: return "non-uniform grid";
        case ErrorCode::SizeMismatch: return "size mismatch";
        case ErrorCode::MissingColumn: return "missing column";
        case ErrorCode::UnorderedTimestamps: return "unordered timestamps";
        case ErrorCode::ParseError: return "parse error";
        case ErrorCode::IoError: return "i/o error";
        case ErrorCode::RunMismatch: return "run mismatch";
        case ErrorCode::OutOfDomain: return "out of domain";
        case ErrorCode::MaskedSupport: return "masked support";
        case ErrorCode::InsufficientMargin: return "insufficient margin";
        case ErrorCode::EquatorialBand: return "equatorial band";
        case ErrorCode::NumericalFailure: return "numerical failure";
        case ErrorCode::SplitInfeasible: return "split infeasible";
        case ErrorCode::EmptyInput: return "empty input";
    }
    return "unknown error";
}

double haversine(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = phi2 - phi1;
    const double dlambda = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadius * std::asin(std::sqrt(std::min(1.0, h)));
}

std::string format_iso_time(double epoch_seconds) {
    using namespace std::chrono;
    const double whole = std::floor(epoch_seconds);
    const double frac = epoch_seconds - whole;
    const sys_seconds tp{seconds{static_cast<long long>(whole)}};
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const hh_mm_ss hms{tp - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()),
                  static_cast<long long>(hms.hours().count()),
                  static_cast<long long>(hms.minutes().count()),
                  static_cast<long long>(hms.seconds().count()));
    std::string out = buf;
    if (frac > 0.0) {
        char fbuf[32];
        std::snprintf(fbuf, sizeof fbuf, "%.6f", frac);
        out += (fbuf + 1);  // drop the leading '0'
    }
    return out + "Z";
}

double parse_iso_time(std::string_view text) {
    text = trim(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    char sep = 0;
    const std::string str(text);
    if (std::sscanf(str.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h, &mi, &s) != 7 ||
        (sep != 'T' && sep != ' ')) {
        throw Error(ErrorCode::ParseError, "bad ISO-8601 time '" + str + "'");
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0.0 || s >= 61.0) {
        throw Error(ErrorCode::ParseError, "invalid calendar time '" + str + "'");
    }
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days_since) * 86400.0 + h * 3600.0 + mi * 60.0 + s;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s) {
    s = trim(s);
    if (s == "nan" || s == "NaN" || s == "NAN") return std::nan("");
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

long long parse_int(std::string_view s) {
    s = trim(s);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, "not an integer: '" + std::string(s) + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << contents;
}

}  // namespace lagdrift
