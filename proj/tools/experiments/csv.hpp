#pragma once

// Minimal CSV emission with a fixed float format (17 significant digits) so
// identical runs give identical bytes.

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

namespace jpose::cli {

struct Na {};

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string, Na>;

inline std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(double v) const { return fmt::format("{:.17g}", v); }
    std::string operator()(std::int64_t v) const { return fmt::format("{}", v); }
    std::string operator()(std::uint64_t v) const { return fmt::format("{}", v); }
    std::string operator()(const std::string& v) const {
      if (v.find_first_of(",\"\n") == std::string::npos) return v;
      std::string quoted = "\"";
      for (char c : v) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      return quoted + "\"";
    }
    std::string operator()(Na) const { return "NA"; }
  };
  return std::visit(Visitor{}, cell);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

inline void write_table(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << '\n';
  }
}

}  // namespace jpose::cli
