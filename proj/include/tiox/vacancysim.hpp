#pragma once

// 1-D rate-equation model of oxygen vacancies in a growing oxide film:
//
//   dc/dt = D d2c/dz2 - k(P) c      on 0 < z < thickness
//
// with zero-flux walls at the substrate and at the growth front. Deposited
// material enters with c = g(P). The default constants are illustrative
// only; nothing here is fitted to data.

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tiox::vacancy {

struct Segment {
  std::string label;
  double duration_s = 0.0;
  double rate_nm_s = 0.0;
  double pressure_torr = 0.0;
  double temperature_c = 0.0;  // carried for the record; the default model ignores it
  bool buffer = false;         // duration rewritten by saturation_scan
};

struct GrowthSchedule {
  std::vector<Segment> segments;

  void validate() const;
  double total_duration() const;
};

// Pressure-dependent rates; P in Torr.
using RateFn = std::function<double(double)>;

struct VacancyParams {
  double diffusivity_nm2_s = 1e-2;
  RateFn incorporation;  // g(P), in [0, 1]
  RateFn annihilation;   // k(P), 1/s, >= 0
  double dz_nm = 0.5;

  // g(P) = g0 / (1 + P/P0), k(P) = k0 P / (P + P0)
  static VacancyParams defaults(double g0 = 0.05, double g_p0_torr = 1e-3, double k0 = 1e-3,
                                double k_p0_torr = 1e-3);
  void validate() const;
};

struct VacancyState {
  double dz_nm = 0.5;
  std::vector<double> c;       // completed cells, index 0 at the substrate
  double t_s = 0.0;
  double pending_nm = 0.0;     // deposited but not yet a full cell
  double pending_source = 0.0; // integral of g over the pending material, nm

  double thickness_nm() const { return dz_nm * static_cast<double>(c.size()) + pending_nm; }
  bool empty() const { return c.empty(); }
  double total() const;        // integral of c dz over completed cells, nm
  double mean() const;         // NaN for an empty film
  // Mean over the first depth_nm above the substrate (clipped to the film).
  double interface_mean(double depth_nm) const;
};

// dt <= dz^2 / (2 D)
double stability_limit(const VacancyParams& params);

// Advance by dt under one schedule segment. Diffusion is explicit central
// differences (finite-volume, zero-flux walls), annihilation is integrated
// exactly over the step, then deposition appends whole cells.
// Throws StabilityViolation when dt exceeds stability_limit().
VacancyState step(VacancyState state, const VacancyParams& params, const Segment& segment,
                  double dt);

struct SimOptions {
  double max_dt_s = 1.0;            // further capped at 0.9 * stability_limit
  double record_every_s = 10.0;     // time-series spacing; segment ends always recorded
};

struct TimePoint {
  double t_s;
  double thickness_nm;
  double mean_c;  // NaN while the film is empty
};

struct Snapshot {
  std::string label;  // segment that just ended
  double t_s;
  std::vector<double> z_nm;  // cell centers
  std::vector<double> c;
};

struct SimResult {
  std::vector<TimePoint> series;
  std::vector<Snapshot> snapshots;
  VacancyState final_state;
  bool empty_film = false;  // no completed cell, final mean undefined
};

SimResult simulate(const GrowthSchedule& schedule, const VacancyParams& params,
                   const SimOptions& opt = {});

struct ScanPoint {
  double buffer_nm;
  double final_mean_c;
};

struct ScanOptions {
  SimOptions sim;
  // Averaging depth above the substrate for the saturation curve; <= 0 uses
  // the whole film.
  double probe_depth_nm = 5.0;
  unsigned threads = 1;  // 0 = hardware concurrency
};

// One simulation per buffer thickness: the template's buffer segment gets
// duration = thickness / rate (dropped for zero thickness).
std::vector<ScanPoint> saturation_scan(const std::vector<double>& buffer_thicknesses_nm,
                                       const GrowthSchedule& schedule_template,
                                       const VacancyParams& params, const ScanOptions& opt = {});

// Vacuum buffer (500 shots), 20 mTorr main growth to ~68 nm, 30 min anneal.
// Rate 0.17 Å/shot at 3.43 shots/s (70 nm in ~20 min).
GrowthSchedule default_schedule(double buffer_nm = 8.5);

struct RunSetup {
  GrowthSchedule schedule;
  VacancyParams params;
  SimOptions sim;
  double probe_depth_nm = 5.0;
};

// TOML: optional [params] (diffusivity_nm2_s, g0, g_p0_torr, k0_per_s,
// k_p0_torr, dz_nm), optional [sim] (max_dt_s, record_every_s,
// probe_depth_nm) and one or more [[segment]] tables (label, duration_s,
// rate_nm_s, pressure_torr, temperature_c, buffer). Unknown keys -> ConfigError.
RunSetup parse_setup(std::string_view toml_text, std::string_view source = "<string>");
RunSetup load_setup(const std::filesystem::path& path);

}  // namespace tiox::vacancy
