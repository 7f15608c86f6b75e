// csv.hpp
//
// Shortest round-trip decimal formatting and minimal numeric CSV row parsing.
#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace heavycs {

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Splits a comma-separated row of reals; nullopt if any field is not a number.
inline std::optional<std::vector<double>> parse_real_row(std::string_view line) {
    std::vector<double> out;
    while (true) {
        const auto comma = line.find(',');
        std::string_view field = trim(line.substr(0, comma));
        double v = 0.0;
        if (field.empty()) return std::nullopt;
        if (field.front() == '+') field.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace heavycs
