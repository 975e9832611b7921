#pragma once

// AFM height-map roughness, shot-count thickness and the empirical growth
// phase rules.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tiox/spectra.hpp"

namespace tiox::film {

struct HeightMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pitch_nm = 1.0;
  std::vector<double> heights_nm;  // row-major

  double at(std::size_t r, std::size_t c) const { return heights_nm[r * cols + c]; }
  double scan_size_um() const { return pitch_nm * static_cast<double>(cols) / 1000.0; }
  void validate() const;
};

enum class Detrend { None, Plane };
std::string_view to_string(Detrend d);
Detrend parse_detrend(std::string_view text);

// RMS height deviation in pm after removing the mean (None) or the
// least-squares plane (Plane). Fewer than 16x16 points -> DegenerateGrid.
double rms_roughness(const HeightMap& map, Detrend detrend = Detrend::Plane);

inline constexpr double kAngstromPerShot = 0.17;

double thickness_from_shots(double shots, double angstrom_per_shot = kAngstromPerShot);

enum class Substrate { GaAs, GaSb, SOI };
enum class SurfacePrep { Capped, OxideDesorbed };
enum class Doping { Undoped, Bulk, Sandwich };

std::string_view to_string(Substrate s);
std::string_view to_string(SurfacePrep p);
std::string_view to_string(Doping d);
Substrate parse_substrate(std::string_view text);
SurfacePrep parse_prep(std::string_view text);  // "capped", "arsenic-capped", "oxide-desorbed"
Doping parse_doping(std::string_view text);

struct GrowthRecord {
  Substrate substrate = Substrate::GaAs;
  SurfacePrep prep = SurfacePrep::Capped;
  double temperature_c = 390.0;
  double buffer_shots = 0.0;
  Doping doping = Doping::Undoped;

  void validate() const;  // 300 <= T <= 650 C, shots >= 0
};

struct PhaseRules {
  double rutile_temperature_c = 450.0;
  double rutile_buffer_shots = 500.0;
  double anatase_lo_c = 370.0;
  double anatase_hi_c = 400.0;

  void validate() const;
};

struct PhasePrediction {
  spectra::Phase phase = spectra::Phase::Unknown;
  int rule = 0;  // 1 temperature, 2 buffer, 3 anatase window
  std::string reason;
};

// Rules in order: T >= rutile_temperature -> rutile; buffer shots >=
// rutile_buffer_shots -> rutile; T inside the anatase window -> anatase.
// Anything else -> OutOfDomain. This is an empirical lookup, not a model.
PhasePrediction predict_phase(const GrowthRecord& record, const PhaseRules& rules = {});

// TOML with keys rutile_temperature_c, rutile_buffer_shots, anatase_lo_c,
// anatase_hi_c (all optional). Unknown keys -> ConfigError.
PhaseRules parse_rules(std::string_view toml_text, std::string_view source = "<string>");
PhaseRules load_rules(const std::filesystem::path& path);

}  // namespace tiox::film
