#pragma once

// Raman phase fingerprinting, PLE resonance fits and fluorescence lifetimes.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tiox::spectra {

enum class XUnit { Wavenumber, THz, Nanometer, Second };

std::string_view to_string(XUnit u);
// "cm-1", "cm^-1", "THz", "nm", "s", "ms" (ms is scaled to seconds by the reader)
XUnit parse_unit(std::string_view text);

// Speed of light in nm * THz.
inline constexpr double kLightNmTHz = 299792.458;

struct Spectrum {
  std::vector<double> x;
  std::vector<double> y;
  XUnit unit = XUnit::Wavenumber;
  std::string sample_id;

  void validate() const;  // x strictly monotone, sizes equal, finite
};

// nm <-> THz (nu = c / lambda); the result is re-sorted to increasing x.
Spectrum convert(const Spectrum& s, XUnit to);

enum class Phase { Anatase, Rutile, Mixed, Unknown };
std::string_view to_string(Phase p);

struct PhononMode {
  std::string label;
  double center = 0.0;     // cm^-1
  double tolerance = 8.0;  // cm^-1
  double weight = 1.0;
};

struct PhononModeTable {
  std::vector<PhononMode> anatase;
  std::vector<PhononMode> rutile;

  void validate() const;
};

// Rutile E_g 449, A_1g 614; anatase E_g 144 (weight 2), B_1g 399, A_1g 515, E_g 639.
PhononModeTable default_mode_table();

// Bands that are labeled but never scored.
struct MaskBand {
  std::string label;
  double center = 0.0;
  double tolerance = 0.0;
};

struct ClassifyOptions {
  double threshold = 0.5;  // minimum weighted match fraction per phase
  // GaAs TO/LO phonons
  std::vector<MaskBand> substrate_masks{{"GaAs TO", 268.0, 8.0}, {"GaAs LO", 292.0, 8.0}};
  // Er3+ visible fluorescence, broad
  std::vector<MaskBand> fluorescence{{"Er3+ fluorescence", 1300.0, 100.0}};
};

struct Peak {
  double center = 0.0;
  double height = 0.0;
  double prominence = 0.0;
};

struct LabeledPeak {
  double center = 0.0;
  std::string label;  // empty when unassigned
  bool scored = false;
};

struct Classification {
  Phase phase = Phase::Unknown;
  double anatase_score = 0.0;
  double rutile_score = 0.0;
  std::vector<LabeledPeak> labels;
};

// Local maxima above min_prominence * max(signal) after subtracting a running
// median baseline, sorted by position. Fewer than 10 points -> InvalidArgument.
std::vector<Peak> detect_peaks(const Spectrum& s, double min_prominence = 0.1);

Classification classify_phase(const std::vector<double>& peak_centers,
                              const PhononModeTable& table = default_mode_table(),
                              const ClassifyOptions& opt = {});
Classification classify_phase(const std::vector<Peak>& peaks,
                              const PhononModeTable& table = default_mode_table(),
                              const ClassifyOptions& opt = {});

enum class LineModel { Gaussian, Lorentzian };
std::string_view to_string(LineModel m);
LineModel parse_line_model(std::string_view text);

struct LineFit {
  double center_thz = 0.0;
  double fwhm_ghz = 0.0;
  double amplitude = 0.0;
  double background = 0.0;
  LineModel model = LineModel::Gaussian;
  struct {
    double center_thz = 0.0, fwhm_ghz = 0.0, amplitude = 0.0, background = 0.0;
  } sigma;
  double residual_rms = 0.0;

  // Model value at frequency nu (THz).
  double evaluate_thz(double nu) const;
};

// Unit-height line shape at offset dx for a given FWHM.
double line_shape(LineModel m, double dx, double fwhm);

// Single line + constant background, fitted in the spectrum's own unit
// (THz or nm) and reported in THz / GHz.
// Errors: IllPosed (no dominant resonance), NonConvergence.
LineFit fit_line(const Spectrum& s, LineModel model = LineModel::Gaussian);

struct LifetimeFit {
  double t1_ms = 0.0;
  double t1_sigma_ms = 0.0;
  double amplitude = 0.0;
  double amplitude_sigma = 0.0;
  double background = 0.0;
  double background_sigma = 0.0;
  double residual_rms = 0.0;
};

// Single exponential + constant background on a trace with x in seconds.
// Errors: WindowTooShort (trace shorter than 3 fitted lifetimes),
// NonConvergence, IllPosed.
LifetimeFit fit_lifetime(const Spectrum& decay);

}  // namespace tiox::spectra
