#pragma once

// Internal: minimal numeric CSV reader/writer shared by the file formats.

#include <filesystem>
#include <string>
#include <vector>

namespace vpp::csv {

struct NumericRow {
  std::size_t line;  // 1-based source line
  std::vector<double> values;
};

/// Reads a CSV whose first line must equal `header` exactly (whitespace
/// around cells is ignored). Every other non-empty line must carry one finite
/// decimal number per column. Errors are ValidationError("file:line: ...").
std::vector<NumericRow> read_numeric(const std::filesystem::path& path,
                                     const std::vector<std::string>& header);

std::vector<std::string> split(const std::string& line, char sep = ',');
std::string trim(const std::string& s);

/// Shortest round-trippable decimal text for a double.
std::string number(double v);

}  // namespace vpp::csv
