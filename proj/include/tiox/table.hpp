#pragma once

// Tabular results with units in the headers and a provenance block.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace tiox::io {

// unit "" marks a text column, "1" a dimensionless number (no header suffix).
struct Column {
  std::string name;
  std::string unit;

  bool numeric() const { return !unit.empty(); }
  std::string header() const;  // name_unit
};

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct ResultTable {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> provenance;

  ResultTable& add_column(std::string name, std::string unit);
  ResultTable& add_row(std::vector<Cell> row);  // throws SchemaMismatch on width
  void note(std::string key, std::string value);

  // Column lookup by name (without unit). Throws SchemaMismatch.
  std::size_t index(std::string_view name) const;
  bool has(std::string_view name) const;
  // Numeric cell as double; NaN for an empty cell. Throws SchemaMismatch on text.
  double number(std::size_t row, std::size_t col) const;
  std::string text(std::size_t row, std::size_t col) const;

  void validate() const;

  // "# key: value" provenance lines, header, rows. Numbers use 10
  // significant digits; identical tables give identical bytes.
  std::string to_csv() const;
};

std::string format_number(double x);

std::string sha256_hex(std::string_view bytes);

// Reads a whole file; missing or unreadable -> InvalidArgument.
std::string read_file(const std::filesystem::path& path);

}  // namespace tiox::io
