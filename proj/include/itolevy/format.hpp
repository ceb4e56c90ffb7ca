#pragma once

#include <charconv>
#include <string>

namespace itolevy {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x)
{
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), x);
    return std::string(buffer, result.ptr);
}

} // namespace itolevy
