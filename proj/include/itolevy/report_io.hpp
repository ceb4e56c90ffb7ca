#pragma once

// Report rendering. Both formats carry the fields
// name, lhs, rhs, se, margin, pass, nPaths, seed, wallTime, truncationBound;
// truncationBound is omitted from JSON objects and left empty in CSV rows
// when a check has none. Non-finite numbers render as null / empty.

#include "itolevy/verify.hpp"

#include <string>
#include <vector>

namespace itolevy::cli {

std::string reports_to_json(const std::vector<verify::Report>& reports);
std::string reports_to_csv(const std::vector<verify::Report>& reports);
std::vector<verify::Report> reports_from_json(const std::string& text);

} // namespace itolevy::cli
