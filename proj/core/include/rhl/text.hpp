#pragma once

#include <string>
#include <string_view>

namespace rhl::text {

// Shortest decimal form that parses back to the same double (at most 17
// significant digits). Infinities and NaN print as inf, -inf, nan.
std::string number(double value);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view value);

}  // namespace rhl::text
