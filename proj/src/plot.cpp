#include "tiox/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "tiox/error.hpp"

namespace tiox::io {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Series {
  std::string label;
  std::vector<double> y;
};

struct SeriesData {
  std::string x_label;
  std::vector<double> x;
  std::vector<Series> series;
};

std::string esc(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string f2(double v) { return fmt::format("{:.2f}", v); }

void require_rows(const ResultTable& t, std::string_view what) {
  require(!t.rows.empty() && !t.columns.empty(), ErrorKind::SchemaMismatch,
          std::string(what) + " plot: result table is empty");
}

SeriesData series_from(const ResultTable& t, std::string_view what) {
  require_rows(t, what);
  require(t.columns.size() >= 2 && t.columns.front().numeric(), ErrorKind::SchemaMismatch,
          std::string(what) + " plot: need a numeric first column and at least one series");
  SeriesData d;
  d.x_label = t.columns.front().header();
  for (std::size_t r = 0; r < t.rows.size(); ++r) d.x.push_back(t.number(r, 0));
  for (std::size_t c = 1; c < t.columns.size(); ++c) {
    if (!t.columns[c].numeric()) continue;
    Series s{t.columns[c].header(), {}};
    for (std::size_t r = 0; r < t.rows.size(); ++r) s.y.push_back(t.number(r, c));
    d.series.push_back(std::move(s));
  }
  require(!d.series.empty(), ErrorKind::SchemaMismatch,
          std::string(what) + " plot: no numeric series columns");
  return d;
}

SeriesData peak_fit_from(const ResultTable& t) {
  require_rows(t, "peak-fit");
  require(t.columns.front().numeric(), ErrorKind::SchemaMismatch,
          "peak-fit plot: first column must be the numeric abscissa");
  const std::size_t obs = t.index("observed");
  const std::size_t fit = t.index("fit");
  SeriesData d;
  d.x_label = t.columns.front().header();
  Series o{t.columns[obs].header(), {}}, f{t.columns[fit].header(), {}}, res{"residual", {}};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    d.x.push_back(t.number(r, 0));
    o.y.push_back(t.number(r, obs));
    f.y.push_back(t.number(r, fit));
    res.y.push_back(o.y.back() - f.y.back());
  }
  res.label = "residual" + (t.columns[obs].unit.empty() || t.columns[obs].unit == "1"
                                ? std::string()
                                : "_" + t.columns[obs].unit);
  d.series = {std::move(o), std::move(f), std::move(res)};
  return d;
}

std::string series_csv(const SeriesData& d) {
  std::string out = d.x_label;
  for (const auto& s : d.series) out += "," + s.label;
  out += '\n';
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    out += format_number(d.x[i]);
    for (const auto& s : d.series) out += "," + format_number(s.y[i]);
    out += '\n';
  }
  return out;
}

std::pair<double, double> finite_range(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

std::string series_svg(const SeriesData& d, std::string_view title) {
  constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 50;
  const auto [x0, x1] = finite_range(d.x);
  std::vector<double> all;
  for (const auto& s : d.series) all.insert(all.end(), s.y.begin(), s.y.end());
  auto [y0, y1] = finite_range(all);
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      W, H, W, H);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  out += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\" font-family=\"sans-serif\">{}</text>\n",
                     f2(L), esc(title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                     f2(L), f2(T), f2(W - L - R), f2(H - T - B));
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\">{}</text>\n",
        f2(px(xv)), f2(H - B + 14), esc(fmt::format("{:.4g}", xv)));
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">{}</text>\n",
        f2(L - 4), f2(py(yv) + 3), esc(fmt::format("{:.4g}", yv)));
  }
  out += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">{}</text>\n",
      f2(L + 0.5 * (W - L - R)), f2(H - 12), esc(d.x_label));
  for (std::size_t k = 0; k < d.series.size(); ++k) {
    const auto& s = d.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      if (!std::isfinite(d.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += f2(px(d.x[i])) + "," + f2(py(s.y[i]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       color, pts);
    const double ly = T + 16.0 * static_cast<double>(k + 1);
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       f2(W - R + 10), f2(ly - 4), f2(W - R + 30), f2(ly - 4), color);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
                       f2(W - R + 36), f2(ly), esc(s.label));
  }
  out += "</svg>\n";
  return out;
}

struct MapCell {
  std::string substrate, film, hkl;
  double area;
  bool minimum = false;
};

std::vector<MapCell> map_cells(const ResultTable& t) {
  require_rows(t, "map");
  const std::size_t cs = t.index("substrate"), cf = t.index("film"), ch = t.index("hkl"),
                    ca = t.index("area");
  std::vector<MapCell> cells;
  std::map<std::pair<std::string, std::string>, double> best;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MapCell c{t.text(r, cs), t.text(r, cf), t.text(r, ch), t.number(r, ca)};
    if (std::isfinite(c.area)) {
      auto [it, fresh] = best.try_emplace({c.substrate, c.film}, c.area);
      if (!fresh) it->second = std::min(it->second, c.area);
    }
    cells.push_back(std::move(c));
  }
  for (auto& c : cells) {
    auto it = best.find({c.substrate, c.film});
    c.minimum = it != best.end() && std::isfinite(c.area) && c.area == it->second;
  }
  return cells;
}

std::string map_csv(const std::vector<MapCell>& cells) {
  std::string out = "substrate,film,hkl,area_A2,is_minimum\n";
  for (const auto& c : cells) {
    out += c.substrate + "," + c.film + "," + c.hkl + "," +
           (std::isfinite(c.area) ? format_number(c.area) : std::string()) + "," +
           (c.minimum ? "1" : "0") + "\n";
  }
  return out;
}

std::string map_svg(const std::vector<MapCell>& cells) {
  std::vector<std::string> rows, cols;
  for (const auto& c : cells) {
    if (std::find(rows.begin(), rows.end(), c.substrate) == rows.end()) rows.push_back(c.substrate);
    const std::string key = c.film + " (" + c.hkl + ")";
    if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
  }
  const auto [a0, a1] = [&] {
    std::vector<double> v;
    for (const auto& c : cells) v.push_back(c.area);
    return finite_range(v);
  }();
  constexpr double cw = 86, chh = 36, L = 90, T = 120;
  const double W = L + cw * static_cast<double>(cols.size()) + 20;
  const double H = T + chh * static_cast<double>(rows.size()) + 40;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      f2(W), f2(H), f2(W), f2(H));
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", f2(W), f2(H));
  out += "<text x=\"10\" y=\"20\" font-size=\"14\" font-family=\"sans-serif\">coincident interface area (A^2); * minimal per substrate/film</text>\n";
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double x = L + cw * (static_cast<double>(j) + 0.5);
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-45 {} {})\">{}</text>\n",
        f2(x), f2(T - 6), f2(x), f2(T - 6), esc(cols[j]));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">{}</text>\n",
        f2(L - 6), f2(T + chh * (static_cast<double>(i) + 0.5) + 4), esc(rows[i]));
  }
  for (const auto& c : cells) {
    const auto i = static_cast<double>(std::find(rows.begin(), rows.end(), c.substrate) - rows.begin());
    const std::string key = c.film + " (" + c.hkl + ")";
    const auto j = static_cast<double>(std::find(cols.begin(), cols.end(), key) - cols.begin());
    std::string fill = "#eeeeee";
    std::string label = "none";
    if (std::isfinite(c.area)) {
      // log scale: small areas dark blue, large areas pale
      const double s = a1 > a0 ? (std::log(c.area) - std::log(a0)) / (std::log(a1) - std::log(a0)) : 0.0;
      const int shade = static_cast<int>(std::lround(70 + 170 * std::clamp(s, 0.0, 1.0)));
      fill = fmt::format("rgb({},{},255)", shade, shade);
      label = fmt::format("{:.0f}", c.area) + (c.minimum ? "*" : "");
    }
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
        f2(L + cw * j), f2(T + chh * i), f2(cw), f2(chh), fill, c.minimum ? "black" : "white",
        c.minimum ? "2.5" : "1");
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">{}</text>\n",
        f2(L + cw * (j + 0.5)), f2(T + chh * (i + 0.5) + 4), esc(label));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

PlotKind parse_plot_kind(std::string_view text) {
  std::string t(text);
  for (char& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "map") return PlotKind::Map;
  if (t == "peak-fit" || t == "peakfit") return PlotKind::PeakFit;
  if (t == "profile") return PlotKind::Profile;
  if (t == "timeseries" || t == "time-series") return PlotKind::Timeseries;
  fail(ErrorKind::InvalidArgument, "unknown plot kind '" + std::string(text) + "'");
}

std::string emit_plot_data(const ResultTable& table, PlotKind kind, PlotFormat format) {
  table.validate();
  switch (kind) {
    case PlotKind::Map: {
      const auto cells = map_cells(table);
      return format == PlotFormat::Csv ? map_csv(cells) : map_svg(cells);
    }
    case PlotKind::PeakFit: {
      const auto d = peak_fit_from(table);
      return format == PlotFormat::Csv ? series_csv(d) : series_svg(d, "peak fit");
    }
    case PlotKind::Profile: {
      const auto d = series_from(table, "profile");
      return format == PlotFormat::Csv ? series_csv(d) : series_svg(d, "depth profile");
    }
    case PlotKind::Timeseries: {
      const auto d = series_from(table, "timeseries");
      return format == PlotFormat::Csv ? series_csv(d) : series_svg(d, "time series");
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown plot kind");
}

}  // namespace tiox::io
