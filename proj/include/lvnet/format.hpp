#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace lvnet::detail {

/// Shortest decimal string that round-trips the exact double.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

}  // namespace lvnet::detail
