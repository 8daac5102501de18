#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

#include "sbst/error.hpp"

namespace sbst {

/// Shortest decimal text that parses back to the same double. Infinities are
/// written as `inf` / `-inf`.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format number");
    return std::string(buf, end);
}

/// Inverse of format_double.
inline double parse_double(std::string_view text) {
    if (text == "inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw Error("not a number: '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace sbst
