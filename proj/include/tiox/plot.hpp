#pragma once

// Plot-ready data derived from result tables. Output is byte-for-byte
// reproducible for a given table.

#include <string>
#include <string_view>

#include "tiox/table.hpp"

namespace tiox::io {

enum class PlotKind { Map, PeakFit, Profile, Timeseries };
enum class PlotFormat { Csv, Svg };

PlotKind parse_plot_kind(std::string_view text);

// Required columns per kind (SchemaMismatch otherwise, also for empty tables):
//   Map         substrate, film, hkl, area (misfit optional); minima are
//               recomputed per (substrate, film)
//   PeakFit     first column abscissa, then observed and fit; residual is
//               observed - fit
//   Profile     first column depth, every further numeric column a series
//   Timeseries  first column time, every further numeric column a series
std::string emit_plot_data(const ResultTable& table, PlotKind kind, PlotFormat format);

}  // namespace tiox::io
