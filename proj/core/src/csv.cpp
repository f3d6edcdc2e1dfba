#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vpp/errors.hpp"

namespace vpp::csv {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<NumericRow> read_numeric(const std::filesystem::path& path,
                                     const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  const std::string where = path.string() + ":";
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<NumericRow> rows;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    for (auto& c : cells) c = trim(c);
    if (!header_seen) {
      header_seen = true;
      if (cells != header) {
        std::string expected;
        for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
        throw ValidationError(where + std::to_string(lineno) + ": expected header '" + expected + "'");
      }
      continue;
    }
    if (cells.size() != header.size()) {
      problems.push_back(where + std::to_string(lineno) + ": expected " +
                         std::to_string(header.size()) + " columns, found " +
                         std::to_string(cells.size()));
      continue;
    }
    NumericRow row{lineno, {}};
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto* first = cells[c].data();
      const auto* last = first + cells[c].size();
      const auto res = std::from_chars(first, last, v);
      if (cells[c].empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
        problems.push_back(where + std::to_string(lineno) + ": column '" + header[c] +
                           "' is not a decimal number: '" + cells[c] + "'");
        continue;
      }
      row.values.push_back(v);
    }
    if (row.values.size() == header.size()) rows.push_back(std::move(row));
  }
  if (!header_seen) problems.push_back(where + " empty file");
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return rows;
}

}  // namespace vpp::csv
