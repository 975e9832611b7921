#pragma once

// Readers for the delimited-text instrument exports.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tiox/filmstats.hpp"
#include "tiox/profiles.hpp"
#include "tiox/spectra.hpp"
#include "tiox/xrdfit.hpp"

namespace tiox::io {

// Columns of a numeric table. Lines starting with '#' are comments;
// "# key: value" comments land in `meta`. Cells split on commas, semicolons,
// tabs or spaces. A first non-comment line that is not numeric is taken as
// the header. Any later non-numeric or short row is a ParseError naming the
// line.
struct DelimitedData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::map<std::string, std::string> meta;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

DelimitedData parse_delimited(std::string_view text, std::string_view source,
                              std::size_t min_columns = 1);

// Two columns: 2theta (degrees), counts.
xrd::DiffractionScan parse_scan(std::string_view text, std::string_view source);

// Two columns with the x unit taken from the header suffix ("shift_cm-1",
// "frequency_THz", "time_ms") or a "# unit: THz" comment; `unit` overrides.
// Millisecond axes are converted to seconds. Rows are sorted by x.
spectra::Spectrum parse_spectrum(std::string_view text, std::string_view source,
                                 std::optional<std::string> unit = std::nullopt);

// Header "z_nm, Ga, As, ..." (first column depth, the rest one element each).
profiles::DepthProfile parse_profile(std::string_view text, std::string_view source);

// Either a plain matrix (one text row per scan line) or a single-column
// raster with "# rows: N", "# cols: M" comments. "# pitch_nm: p" sets the
// pixel spacing; `pitch_nm` overrides.
film::HeightMap parse_height_map(std::string_view text, std::string_view source,
                                 std::optional<double> pitch_nm = std::nullopt);

// CSV with header: sample, substrate, prep, temperature_c, buffer_shots[, doping]
struct NamedRecord {
  std::string sample;
  film::GrowthRecord record;
};
std::vector<NamedRecord> parse_growth_records(std::string_view text, std::string_view source);

}  // namespace tiox::io
