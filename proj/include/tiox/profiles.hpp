#pragma once

// EELS depth profiles: per-element normalization and erfc interdiffusion fits.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tiox::profiles {

struct Channel {
  std::string element;
  std::vector<double> values;
};

struct DepthProfile {
  std::vector<double> z_nm;  // signed distance from the nominal interface, monotone
  std::vector<Channel> channels;

  void validate() const;
  const Channel& channel(const std::string& element) const;  // throws InvalidArgument
};

// Each channel divided by its own maximum. Negative counts -> InvalidArgument,
// a channel without a positive value -> AllZeroChannel.
DepthProfile normalize(const DepthProfile& raw);

// c(z) = c0/2 erfc((z - z0)/L) + baseline
double erfc_profile(double z, double c0, double z0, double length, double baseline);

struct DiffusionOptions {
  double time_s = 3000.0;  // thermal budget, ~20 min growth + 30 min anneal
  // Fit range; default keeps the step and stops 4 initial widths past it,
  // which leaves out accumulation bumps deeper in the film.
  std::optional<std::pair<double, double>> window;
};

struct DiffusionFit {
  double length_nm = 0.0;     // L
  double length_sigma_nm = 0.0;
  double d_cm2_s = 0.0;       // D = L^2 / (4 t)
  double d_sigma_cm2_s = 0.0;
  double c0 = 0.0;
  double z0_nm = 0.0;
  double z0_sigma_nm = 0.0;
  double baseline = 0.0;
  double residual_rms = 0.0;
  double time_s = 0.0;
  bool resolution_limited = false;  // L clamped to the grid spacing
};

// D in cm^2/s from L (nm) and t (s), L = 2 sqrt(D t).
double diffusion_coefficient(double length_nm, double time_s);
double diffusion_length(double d_cm2_s, double time_s);

// Errors: MonotonicityViolation (no step), NonConvergence, InvalidArgument.
DiffusionFit fit_diffusion(const DepthProfile& profile, const std::string& element,
                           const DiffusionOptions& opt = {});

}  // namespace tiox::profiles
