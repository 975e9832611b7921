#include "tiox/table.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "tiox/error.hpp"

namespace tiox::io {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string Column::header() const {
  if (unit.empty() || unit == "1") return name;
  return name + "_" + unit;
}

ResultTable& ResultTable::add_column(std::string name, std::string unit) {
  columns.push_back({std::move(name), std::move(unit)});
  return *this;
}

ResultTable& ResultTable::add_row(std::vector<Cell> row) {
  require(row.size() == columns.size(), ErrorKind::SchemaMismatch,
          "result table: row has " + std::to_string(row.size()) + " cells, expected " +
              std::to_string(columns.size()));
  rows.push_back(std::move(row));
  return *this;
}

void ResultTable::note(std::string key, std::string value) {
  provenance.emplace_back(std::move(key), std::move(value));
}

std::size_t ResultTable::index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  fail(ErrorKind::SchemaMismatch, "result table has no column '" + std::string(name) + "'");
}

bool ResultTable::has(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return true;
  }
  return false;
}

double ResultTable::number(std::size_t row, std::size_t col) const {
  const Cell& cell = rows.at(row).at(col);
  if (std::holds_alternative<double>(cell)) return std::get<double>(cell);
  if (std::holds_alternative<std::int64_t>(cell)) return static_cast<double>(std::get<std::int64_t>(cell));
  if (std::holds_alternative<std::monostate>(cell)) return std::numeric_limits<double>::quiet_NaN();
  fail(ErrorKind::SchemaMismatch, "column '" + columns[col].name + "' holds text, expected a number");
}

std::string ResultTable::text(std::size_t row, std::size_t col) const {
  const Cell& cell = rows.at(row).at(col);
  if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
  if (std::holds_alternative<double>(cell)) return format_number(std::get<double>(cell));
  if (std::holds_alternative<std::int64_t>(cell)) return std::to_string(std::get<std::int64_t>(cell));
  return {};
}

void ResultTable::validate() const {
  for (const auto& row : rows) {
    require(row.size() == columns.size(), ErrorKind::SchemaMismatch, "result table: ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) {
      const bool is_text = std::holds_alternative<std::string>(row[c]);
      require(is_text != columns[c].numeric() || std::holds_alternative<std::monostate>(row[c]),
              ErrorKind::SchemaMismatch,
              "result table: column '" + columns[c].name + "' mixes text and numbers");
    }
  }
}

std::string ResultTable::to_csv() const {
  validate();
  std::string out;
  for (const auto& [k, v] : provenance) out += "# " + k + ": " + v + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c].header();
  }
  out += '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += quote(text(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  return fmt::format("{:.10g}", x);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::InvalidArgument, "sha256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidArgument, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace tiox::io
