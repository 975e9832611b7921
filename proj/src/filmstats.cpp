#include "tiox/filmstats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <toml.hpp>

#include "tiox/error.hpp"

namespace tiox::film {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::string fmt_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

void HeightMap::validate() const {
  require(heights_nm.size() == rows * cols, ErrorKind::InvalidArgument,
          "height map: data size does not match rows x cols");
  require(std::isfinite(pitch_nm) && pitch_nm > 0.0, ErrorKind::InvalidArgument,
          "height map: pitch must be > 0");
  for (double h : heights_nm) {
    require(std::isfinite(h), ErrorKind::InvalidArgument, "height map: non-finite height");
  }
}

std::string_view to_string(Detrend d) { return d == Detrend::None ? "none" : "plane"; }

Detrend parse_detrend(std::string_view text) {
  const std::string t = lower(text);
  if (t == "none") return Detrend::None;
  if (t == "plane") return Detrend::Plane;
  fail(ErrorKind::InvalidArgument, "unknown detrend '" + std::string(text) + "' (none|plane)");
}

double rms_roughness(const HeightMap& map, Detrend detrend) {
  if (map.rows < 16 || map.cols < 16) {
    fail(ErrorKind::DegenerateGrid, "height map is " + std::to_string(map.rows) + "x" +
                                        std::to_string(map.cols) + ", need at least 16x16");
  }
  map.validate();
  const auto n = static_cast<double>(map.heights_nm.size());

  double sum2 = 0.0;
  if (detrend == Detrend::None) {
    double mean = 0.0;
    for (double h : map.heights_nm) mean += h;
    mean /= n;
    for (double h : map.heights_nm) sum2 += (h - mean) * (h - mean);
  } else {
    // centred coordinates keep the normal equations well conditioned
    const double xc = 0.5 * static_cast<double>(map.cols - 1);
    const double yc = 0.5 * static_cast<double>(map.rows - 1);
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t r = 0; r < map.rows; ++r) {
      for (std::size_t c = 0; c < map.cols; ++c) {
        const Eigen::Vector3d row(1.0, static_cast<double>(c) - xc, static_cast<double>(r) - yc);
        ata += row * row.transpose();
        atb += row * map.at(r, c);
      }
    }
    const Eigen::Vector3d coef = ata.ldlt().solve(atb);
    for (std::size_t r = 0; r < map.rows; ++r) {
      for (std::size_t c = 0; c < map.cols; ++c) {
        const double fit = coef[0] + coef[1] * (static_cast<double>(c) - xc) +
                           coef[2] * (static_cast<double>(r) - yc);
        const double d = map.at(r, c) - fit;
        sum2 += d * d;
      }
    }
  }
  return std::sqrt(sum2 / n) * 1000.0;
}

double thickness_from_shots(double shots, double angstrom_per_shot) {
  require(std::isfinite(shots) && shots >= 0.0, ErrorKind::InvalidArgument,
          "shot count must be >= 0");
  require(std::isfinite(angstrom_per_shot) && angstrom_per_shot > 0.0, ErrorKind::InvalidArgument,
          "growth rate per shot must be > 0");
  return shots * angstrom_per_shot / 10.0;
}

std::string_view to_string(Substrate s) {
  switch (s) {
    case Substrate::GaAs: return "GaAs";
    case Substrate::GaSb: return "GaSb";
    case Substrate::SOI: return "SOI";
  }
  return "?";
}

std::string_view to_string(SurfacePrep p) {
  return p == SurfacePrep::Capped ? "capped" : "oxide-desorbed";
}

std::string_view to_string(Doping d) {
  switch (d) {
    case Doping::Undoped: return "undoped";
    case Doping::Bulk: return "bulk";
    case Doping::Sandwich: return "sandwich";
  }
  return "?";
}

Doping parse_doping(std::string_view text) {
  const std::string t = lower(text);
  if (t == "undoped" || t == "none") return Doping::Undoped;
  if (t == "bulk") return Doping::Bulk;
  if (t == "sandwich") return Doping::Sandwich;
  fail(ErrorKind::InvalidArgument, "unknown doping '" + std::string(text) + "' (undoped|bulk|sandwich)");
}

Substrate parse_substrate(std::string_view text) {
  const std::string t = lower(text);
  if (t == "gaas") return Substrate::GaAs;
  if (t == "gasb") return Substrate::GaSb;
  if (t == "soi" || t == "si") return Substrate::SOI;
  fail(ErrorKind::InvalidArgument, "unknown substrate '" + std::string(text) + "'");
}

SurfacePrep parse_prep(std::string_view text) {
  const std::string t = lower(text);
  if (t == "capped" || t == "as-capped" || t == "arsenic-capped") return SurfacePrep::Capped;
  if (t == "oxide-desorbed" || t == "desorbed" || t == "native") return SurfacePrep::OxideDesorbed;
  fail(ErrorKind::InvalidArgument, "unknown surface preparation '" + std::string(text) + "'");
}

void GrowthRecord::validate() const {
  require(std::isfinite(temperature_c) && temperature_c >= 300.0 && temperature_c <= 650.0,
          ErrorKind::InvalidArgument,
          "growth temperature " + fmt_number(temperature_c) + " C outside 300-650 C");
  require(std::isfinite(buffer_shots) && buffer_shots >= 0.0, ErrorKind::InvalidArgument,
          "buffer shot count must be >= 0");
}

void PhaseRules::validate() const {
  require(anatase_lo_c <= anatase_hi_c, ErrorKind::InvalidArgument,
          "phase rules: anatase window is inverted");
  require(rutile_buffer_shots >= 0.0, ErrorKind::InvalidArgument,
          "phase rules: buffer threshold must be >= 0");
}

PhasePrediction predict_phase(const GrowthRecord& record, const PhaseRules& rules) {
  record.validate();
  rules.validate();
  if (record.temperature_c >= rules.rutile_temperature_c) {
    return {spectra::Phase::Rutile, 1,
            "empirical rule: T >= " + fmt_number(rules.rutile_temperature_c) + " C"};
  }
  if (record.buffer_shots >= rules.rutile_buffer_shots) {
    return {spectra::Phase::Rutile, 2,
            "empirical rule: vacuum buffer >= " + fmt_number(rules.rutile_buffer_shots) + " shots"};
  }
  if (record.temperature_c >= rules.anatase_lo_c && record.temperature_c <= rules.anatase_hi_c) {
    return {spectra::Phase::Anatase, 3,
            "empirical rule: " + fmt_number(rules.anatase_lo_c) + "-" +
                fmt_number(rules.anatase_hi_c) + " C without a thick buffer"};
  }
  fail(ErrorKind::OutOfDomain, "no empirical rule covers T = " + fmt_number(record.temperature_c) +
                                   " C with " + fmt_number(record.buffer_shots) + " buffer shots");
}

PhaseRules parse_rules(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(source), e.source().begin.line, std::string(e.description()));
  }
  PhaseRules rules;
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    const auto v = node.value<double>();
    if (!v) fail(ErrorKind::Config, "phase rules: " + k + " must be a number");
    if (k == "rutile_temperature_c") rules.rutile_temperature_c = *v;
    else if (k == "rutile_buffer_shots") rules.rutile_buffer_shots = *v;
    else if (k == "anatase_lo_c") rules.anatase_lo_c = *v;
    else if (k == "anatase_hi_c") rules.anatase_hi_c = *v;
    else fail(ErrorKind::Config, "phase rules: unknown key '" + k + "'");
  }
  try {
    rules.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return rules;
}

PhaseRules load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open phase rules " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str(), path.string());
}

}  // namespace tiox::film
