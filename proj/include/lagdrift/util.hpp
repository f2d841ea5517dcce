// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lagdrift {

/// Seconds since the Unix epoch -> "YYYY-MM-DDTHH:MM:SSZ" (sub-second part kept when nonzero).
std::string format_iso_time(double epoch_seconds);
/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z]" (a space separator is accepted too).
double parse_iso_time(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);
std::string_view trim(std::string_view s);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Round-trippable decimal representation of a double.
std::string format_double(double v);

/// 64-bit FNV-1a; used for stable config hashes.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace lagdrift
