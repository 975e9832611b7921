#pragma once

// Voigt fits of diffraction peaks and single-line size/strain analysis.

#include <complex>
#include <span>
#include <vector>

namespace tiox::xrd {

inline constexpr double kCuKalpha1 = 1.540598;  // Å
inline constexpr double kScherrerK = 0.9;

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0, by Weideman's
// rational expansion with 32 terms (relative error ~1e-12 on Re w for the
// arguments used in line shapes).
std::complex<double> faddeeva(std::complex<double> z);

// Unit-height Voigt profile: Gaussian and Lorentzian FWHMs, evaluated at
// offset dx from the center. Either width may be zero; both zero gives a
// unit spike at dx = 0.
double voigt_unit(double dx, double fwhm_g, double fwhm_l);

// Approximate Voigt FWHM (Olivero-Longbothum).
double voigt_fwhm(double fwhm_g, double fwhm_l);

struct DiffractionScan {
  std::vector<double> two_theta;  // degrees, strictly increasing
  std::vector<double> intensity;  // counts, >= 0

  void validate() const;
};

struct Window {
  double lo = 0.0;
  double hi = 0.0;
};

struct VoigtPeak {
  double center = 0.0;     // degrees 2theta
  double fwhm_g = 0.0;     // degrees
  double fwhm_l = 0.0;     // degrees
  double amplitude = 0.0;  // counts above background at the center
  double bg_slope = 0.0;   // counts / degree, about bg_reference
  double bg_offset = 0.0;  // counts at bg_reference
  double bg_reference = 0.0;

  // one standard error each, from the fit covariance
  struct {
    double center = 0.0, fwhm_g = 0.0, fwhm_l = 0.0, amplitude = 0.0, bg_slope = 0.0,
           bg_offset = 0.0;
  } sigma;

  double residual_rms = 0.0;
  int iterations = 0;
  Window window;

  double background(double two_theta) const {
    return bg_offset + bg_slope * (two_theta - bg_reference);
  }
  double evaluate(double two_theta) const;
};

// Least-squares Voigt + linear background over the window.
// Errors: IllPosed (< 20 points, peak at the window edge, amplitude below
// 3x noise), NonConvergence.
VoigtPeak fit_voigt(const DiffractionScan& scan, Window window);

struct ValueWithError {
  double value = 0.0;
  double sigma = 0.0;
};

struct SizeStrainOptions {
  double wavelength = kCuKalpha1;  // Å
  double k = kScherrerK;
  // instrument profile, subtracted in quadrature (Gaussian) / linearly (Lorentzian)
  double instrument_fwhm_g = 0.0;  // degrees
  double instrument_fwhm_l = 0.0;  // degrees
};

struct SizeStrainResult {
  ValueWithError tau_nm;
  ValueWithError epsilon_percent;
  double wavelength = kCuKalpha1;
  double k = kScherrerK;
};

// Lorentzian integral breadth -> Scherrer size, Gaussian integral breadth ->
// Wilson microstrain. Throws DegenerateBreadth when a breadth is zero within
// its uncertainty.
SizeStrainResult size_strain(const VoigtPeak& peak, const SizeStrainOptions& opt = {});

// Integral breadths in radians of 2theta.
double lorentz_integral_breadth(double fwhm_l_deg);
double gauss_integral_breadth(double fwhm_g_deg);

// d = lambda / (2 sin theta). Throws OutOfRange unless 1e-3 <= 2theta < 180.
double bragg_d(double two_theta_deg, double wavelength = kCuKalpha1);
// Inverse of bragg_d. Throws OutOfRange when lambda > 2d.
double bragg_two_theta(double d, double wavelength = kCuKalpha1);

enum class CrystalFamily { Cubic, Tetragonal };

// Reflection indices are kept as measured, e.g. (004), not reduced.
struct Reflection {
  int h = 0, k = 0, l = 0;
};

// Cubic: a = d sqrt(h^2 + k^2 + l^2). Tetragonal (00l): c = l d; (hk0):
// a = d sqrt(h^2 + k^2). Mixed tetragonal reflections need both constants and
// are rejected.
double lattice_param(double d, Reflection refl, CrystalFamily family);

}  // namespace tiox::xrd
