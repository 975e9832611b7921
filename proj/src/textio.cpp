#include "tiox/textio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "tiox/error.hpp"

namespace tiox::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> out;
  const bool has_hard = line.find_first_of(",;\t") != std::string_view::npos;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    const bool end = i == line.size();
    const char ch = end ? ',' : line[i];
    const bool sep = has_hard ? (ch == ',' || ch == ';' || ch == '\t') : (ch == ' ');
    if (end || sep) {
      auto cell = trim(line.substr(start, i - start));
      if (has_hard || !cell.empty()) out.push_back(cell);
      start = i + 1;
    }
  }
  return out;
}

std::optional<double> to_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

template <typename F>
void for_each_line(std::string_view text, F&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

}  // namespace

DelimitedData parse_delimited(std::string_view text, std::string_view source,
                              std::size_t min_columns) {
  const std::string src(source);
  DelimitedData out;
  bool seen_data = false;
  std::size_t width = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = trim(raw);
    if (line.empty()) return;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        out.meta[lower(trim(body.substr(0, colon)))] = std::string(trim(body.substr(colon + 1)));
      }
      return;
    }
    const auto cells = split_cells(line);
    std::vector<double> values;
    values.reserve(cells.size());
    bool numeric = true;
    for (auto c : cells) {
      const auto v = to_number(c);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric) {
      if (!seen_data && out.header.empty()) {
        for (auto c : cells) out.header.emplace_back(c);
        width = out.header.size();
        if (width < min_columns) {
          throw ParseError(src, line_no, "header has " + std::to_string(width) + " columns, need " +
                                             std::to_string(min_columns));
        }
        return;
      }
      throw ParseError(src, line_no, "non-numeric value in row '" + std::string(line) + "'");
    }
    if (!seen_data) {
      if (width == 0) width = values.size();
      if (width < min_columns) {
        throw ParseError(src, line_no, "row has " + std::to_string(values.size()) +
                                           " columns, need " + std::to_string(min_columns));
      }
      out.columns.assign(width, {});
      seen_data = true;
    }
    if (values.size() != width) {
      throw ParseError(src, line_no, "row has " + std::to_string(values.size()) +
                                         " columns, expected " + std::to_string(width));
    }
    for (std::size_t i = 0; i < width; ++i) out.columns[i].push_back(values[i]);
  });
  if (!seen_data) throw ParseError(src, 0, "no numeric rows");
  return out;
}

xrd::DiffractionScan parse_scan(std::string_view text, std::string_view source) {
  auto data = parse_delimited(text, source, 2);
  xrd::DiffractionScan scan{std::move(data.columns[0]), std::move(data.columns[1])};
  try {
    scan.validate();
  } catch (const Error& e) {
    throw ParseError(std::string(source), 0, e.what());
  }
  return scan;
}

spectra::Spectrum parse_spectrum(std::string_view text, std::string_view source,
                                 std::optional<std::string> unit) {
  auto data = parse_delimited(text, source, 2);
  std::string unit_text;
  if (unit) {
    unit_text = *unit;
  } else if (auto it = data.meta.find("unit"); it != data.meta.end()) {
    unit_text = it->second;
  } else if (!data.header.empty()) {
    const auto& h = data.header.front();
    const auto us = h.find('_');
    if (us != std::string::npos) unit_text = h.substr(us + 1);
  }
  if (unit_text.empty()) {
    throw ParseError(std::string(source), 0,
                     "spectrum has no x unit (header like 'shift_cm-1' or '# unit: THz')");
  }
  spectra::Spectrum s;
  try {
    s.unit = spectra::parse_unit(unit_text);
  } catch (const Error& e) {
    throw ParseError(std::string(source), 0, e.what());
  }
  const double scale = lower(unit_text) == "ms" ? 1e-3 : 1.0;
  if (auto it = data.meta.find("sample"); it != data.meta.end()) s.sample_id = it->second;

  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.columns[0][a] < data.columns[0][b]; });
  for (auto i : order) {
    s.x.push_back(data.columns[0][i] * scale);
    s.y.push_back(data.columns[1][i]);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw ParseError(std::string(source), 0, e.what());
  }
  return s;
}

profiles::DepthProfile parse_profile(std::string_view text, std::string_view source) {
  auto data = parse_delimited(text, source, 2);
  if (data.header.empty()) {
    throw ParseError(std::string(source), 0, "depth profile needs a header naming the elements");
  }
  profiles::DepthProfile p;
  p.z_nm = std::move(data.columns[0]);
  for (std::size_t i = 1; i < data.columns.size(); ++i) {
    p.channels.push_back({data.header[i], std::move(data.columns[i])});
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw ParseError(std::string(source), 0, e.what());
  }
  return p;
}

film::HeightMap parse_height_map(std::string_view text, std::string_view source,
                                 std::optional<double> pitch_nm) {
  auto data = parse_delimited(text, source, 1);
  film::HeightMap map;
  const std::string src(source);
  auto meta_number = [&](const char* key) -> std::optional<double> {
    auto it = data.meta.find(key);
    if (it == data.meta.end()) return std::nullopt;
    const auto v = to_number(trim(it->second));
    if (!v) throw ParseError(src, 0, std::string("bad '") + key + "' value");
    return v;
  };
  const auto rows = meta_number("rows");
  const auto cols = meta_number("cols");
  if (rows || cols) {
    if (!rows || !cols || data.columns.size() != 1) {
      throw ParseError(src, 0, "raster needs '# rows:' and '# cols:' and a single value column");
    }
    map.rows = static_cast<std::size_t>(*rows);
    map.cols = static_cast<std::size_t>(*cols);
    map.heights_nm = std::move(data.columns[0]);
    if (map.heights_nm.size() != map.rows * map.cols) {
      throw ParseError(src, 0, "raster holds " + std::to_string(map.heights_nm.size()) +
                                   " values, header says " + std::to_string(map.rows * map.cols));
    }
  } else {
    map.rows = data.rows();
    map.cols = data.columns.size();
    map.heights_nm.reserve(map.rows * map.cols);
    for (std::size_t r = 0; r < map.rows; ++r) {
      for (std::size_t c = 0; c < map.cols; ++c) map.heights_nm.push_back(data.columns[c][r]);
    }
  }
  if (pitch_nm) {
    map.pitch_nm = *pitch_nm;
  } else if (const auto p = meta_number("pitch_nm")) {
    map.pitch_nm = *p;
  }
  return map;
}

std::vector<NamedRecord> parse_growth_records(std::string_view text, std::string_view source) {
  const std::string src(source);
  std::vector<std::string> header;
  std::vector<NamedRecord> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    const auto cells = split_cells(line);
    if (header.empty()) {
      for (auto c : cells) header.push_back(lower(c));
      for (const char* need : {"sample", "substrate", "prep", "temperature_c", "buffer_shots"}) {
        if (std::find(header.begin(), header.end(), need) == header.end()) {
          throw ParseError(src, line_no, std::string("growth records need a '") + need + "' column");
        }
      }
      return;
    }
    if (cells.size() != header.size()) {
      throw ParseError(src, line_no, "row has " + std::to_string(cells.size()) + " cells, expected " +
                                         std::to_string(header.size()));
    }
    NamedRecord rec;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& key = header[i];
      const auto cell = cells[i];
      try {
        if (key == "sample") {
          rec.sample = std::string(cell);
        } else if (key == "substrate") {
          rec.record.substrate = film::parse_substrate(cell);
        } else if (key == "prep") {
          rec.record.prep = film::parse_prep(cell);
        } else if (key == "temperature_c" || key == "buffer_shots") {
          const auto v = to_number(cell);
          if (!v) throw ParseError(src, line_no, "non-numeric " + key + " '" + std::string(cell) + "'");
          (key == "temperature_c" ? rec.record.temperature_c : rec.record.buffer_shots) = *v;
        } else if (key == "doping") {
          rec.record.doping = film::parse_doping(cell);
        }
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(src, line_no, e.what());
      }
    }
    out.push_back(std::move(rec));
  });
  if (header.empty()) throw ParseError(src, 0, "growth records file is empty");
  return out;
}

}  // namespace tiox::io
