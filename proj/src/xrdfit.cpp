#include "tiox/xrdfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "tiox/error.hpp"
#include "tiox/lsq.hpp"
#include "tiox/stats.hpp"

namespace tiox::xrd {

namespace {

constexpr int kTerms = 32;
constexpr double kDeg = std::numbers::pi / 180.0;
const double kSqrtLn2 = std::sqrt(std::numbers::ln2);

struct WeidemanTable {
  double l;
  std::array<double, kTerms> coef;  // coef[m-1] multiplies Z^(m-1)
};

const WeidemanTable& weideman() {
  static const WeidemanTable table = [] {
    WeidemanTable t{};
    const int m_half = 2 * kTerms;
    t.l = std::sqrt(kTerms / std::sqrt(2.0));
    // A[m] = 1/(2M) sum_{k=-M+1}^{M-1} f(k) cos(pi m k / M),
    // f(k) = exp(-s^2) (L^2 + s^2), s = L tan(pi k / (2M))
    for (int m = 1; m <= kTerms; ++m) {
      double acc = 0.0;
      for (int k = -m_half + 1; k <= m_half - 1; ++k) {
        const double s = t.l * std::tan(std::numbers::pi * k / (2.0 * m_half));
        const double f = std::exp(-s * s) * (t.l * t.l + s * s);
        acc += f * std::cos(std::numbers::pi * m * k / m_half);
      }
      t.coef[static_cast<std::size_t>(m - 1)] = acc / (2.0 * m_half);
    }
    return t;
  }();
  return table;
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
  const auto& t = weideman();
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> denom = t.l - i * z;
  const std::complex<double> zz = (t.l + i * z) / denom;
  std::complex<double> p = 0.0;
  for (int m = kTerms - 1; m >= 0; --m) p = p * zz + t.coef[static_cast<std::size_t>(m)];
  return 2.0 * p / (denom * denom) + (1.0 / std::sqrt(std::numbers::pi)) / denom;
}

double voigt_unit(double dx, double fwhm_g, double fwhm_l) {
  fwhm_g = std::abs(fwhm_g);
  fwhm_l = std::abs(fwhm_l);
  const double gamma = 0.5 * fwhm_l;
  const double sigma = fwhm_g / (2.0 * std::sqrt(2.0) * kSqrtLn2);
  if (sigma <= 1e-9 * gamma || fwhm_g == 0.0) {
    if (gamma == 0.0) return dx == 0.0 ? 1.0 : 0.0;
    const double u = dx / gamma;
    return 1.0 / (1.0 + u * u);
  }
  if (gamma <= 1e-12 * sigma) {
    const double u = dx / sigma;
    return std::exp(-0.5 * u * u);
  }
  const double scale = 1.0 / (sigma * std::sqrt(2.0));
  const double y = gamma * scale;
  const double peak = faddeeva({0.0, y}).real();
  return faddeeva({dx * scale, y}).real() / peak;
}

double voigt_fwhm(double fwhm_g, double fwhm_l) {
  return 0.5346 * fwhm_l + std::sqrt(0.2166 * fwhm_l * fwhm_l + fwhm_g * fwhm_g);
}

void DiffractionScan::validate() const {
  require(two_theta.size() == intensity.size(), ErrorKind::InvalidArgument,
          "scan: abscissa and intensity lengths differ");
  for (std::size_t i = 0; i < two_theta.size(); ++i) {
    require(std::isfinite(two_theta[i]) && std::isfinite(intensity[i]), ErrorKind::InvalidArgument,
            "scan: non-finite value at point " + std::to_string(i));
    require(intensity[i] >= 0.0, ErrorKind::InvalidArgument,
            "scan: negative intensity at point " + std::to_string(i));
    if (i > 0) {
      require(two_theta[i] > two_theta[i - 1], ErrorKind::InvalidArgument,
              "scan: 2theta not strictly increasing at point " + std::to_string(i));
    }
  }
}

double VoigtPeak::evaluate(double two_theta) const {
  return amplitude * voigt_unit(two_theta - center, fwhm_g, fwhm_l) + background(two_theta);
}

VoigtPeak fit_voigt(const DiffractionScan& scan, Window window) {
  scan.validate();
  require(window.hi > window.lo, ErrorKind::InvalidArgument, "fit_voigt: empty window");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < scan.two_theta.size(); ++i) {
    if (scan.two_theta[i] >= window.lo && scan.two_theta[i] <= window.hi) {
      x.push_back(scan.two_theta[i]);
      y.push_back(scan.intensity[i]);
    }
  }
  const std::size_t n = x.size();
  require(n >= 20, ErrorKind::IllPosed,
          "fit_voigt: window holds " + std::to_string(n) + " points, need >= 20");

  // Background line through the mean of the outer points on each side.
  const std::size_t edge = std::max<std::size_t>(3, n / 20);
  double xl = 0, yl = 0, xr = 0, yr = 0;
  for (std::size_t i = 0; i < edge; ++i) {
    xl += x[i];
    yl += y[i];
    xr += x[n - 1 - i];
    yr += y[n - 1 - i];
  }
  xl /= edge;
  yl /= edge;
  xr /= edge;
  yr /= edge;
  const double ref = 0.5 * (x.front() + x.back());
  const double slope0 = (yr - yl) / (xr - xl);
  const double offset0 = yl + slope0 * (ref - xl);

  std::vector<double> net(n);
  for (std::size_t i = 0; i < n; ++i) net[i] = y[i] - (offset0 + slope0 * (x[i] - ref));
  const std::vector<double> smooth = stats::moving_average(net, 5);
  const auto peak_it = std::max_element(smooth.begin(), smooth.end());
  const std::size_t ip = static_cast<std::size_t>(peak_it - smooth.begin());
  const double amp0 = *peak_it;
  const double noise = stats::difference_noise(net);

  require(amp0 > 3.0 * noise && amp0 > 0.0, ErrorKind::IllPosed,
          "fit_voigt: no peak above 3x noise in window");
  require(ip > 1 && ip + 2 < n, ErrorKind::IllPosed, "fit_voigt: peak at window edge");

  // half-height crossings
  const double half = 0.5 * amp0;
  std::size_t left = ip, right = ip;
  while (left > 0 && smooth[left] > half) --left;
  while (right + 1 < n && smooth[right] > half) ++right;
  double fwhm0 = x[right] - x[left];
  if (fwhm0 <= 0.0) fwhm0 = 3.0 * (x[1] - x[0]);
  // centroid of the top part
  double wsum = 0.0, csum = 0.0;
  for (std::size_t i = left; i <= right; ++i) {
    const double w = std::max(0.0, smooth[i] - half);
    wsum += w;
    csum += w * x[i];
  }
  const double center0 = wsum > 0.0 ? csum / wsum : x[ip];
  const double width0 = fwhm0 / 1.6245;

  auto model = [&](const lsq::Vector& p, double xi) {
    return p[3] * voigt_unit(xi - p[0], p[1], p[2]) + p[5] + p[4] * (xi - ref);
  };
  lsq::ResidualFn residuals = [&](const lsq::Vector& p) {
    lsq::Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) r[static_cast<Eigen::Index>(i)] = model(p, x[i]) - y[i];
    return r;
  };
  lsq::Vector start(6);
  start << center0, width0, width0, amp0, slope0, offset0;
  lsq::Options opt;
  lsq::Vector scale(6);
  const double span = x.back() - x.front();
  scale << span, fwhm0, fwhm0, amp0, amp0 / span, amp0;
  opt.typical_scale = scale;
  const lsq::Result fit = lsq::levenberg_marquardt(residuals, start, opt);

  VoigtPeak peak;
  peak.center = fit.params[0];
  peak.fwhm_g = std::abs(fit.params[1]);
  peak.fwhm_l = std::abs(fit.params[2]);
  peak.amplitude = fit.params[3];
  peak.bg_slope = fit.params[4];
  peak.bg_offset = fit.params[5];
  peak.bg_reference = ref;
  peak.sigma.center = fit.std_errors[0];
  peak.sigma.fwhm_g = fit.std_errors[1];
  peak.sigma.fwhm_l = fit.std_errors[2];
  peak.sigma.amplitude = fit.std_errors[3];
  peak.sigma.bg_slope = fit.std_errors[4];
  peak.sigma.bg_offset = fit.std_errors[5];
  peak.residual_rms = fit.rms;
  peak.iterations = fit.iterations;
  peak.window = {x.front(), x.back()};

  require(peak.amplitude > 0.0, ErrorKind::IllPosed, "fit_voigt: fitted amplitude not positive");
  require(peak.center > x.front() && peak.center < x.back(), ErrorKind::IllPosed,
          "fit_voigt: fitted center outside window");
  require(peak.fwhm_g > 0.0 || peak.fwhm_l > 0.0, ErrorKind::IllPosed,
          "fit_voigt: zero width");
  return peak;
}

double lorentz_integral_breadth(double fwhm_l_deg) {
  return 0.5 * std::numbers::pi * fwhm_l_deg * kDeg;
}

double gauss_integral_breadth(double fwhm_g_deg) {
  return 0.5 * fwhm_g_deg * std::sqrt(std::numbers::pi) / kSqrtLn2 * kDeg;
}

SizeStrainResult size_strain(const VoigtPeak& peak, const SizeStrainOptions& opt) {
  require(opt.wavelength > 0.0, ErrorKind::InvalidArgument, "size_strain: wavelength must be > 0");
  require(opt.k > 0.0, ErrorKind::InvalidArgument, "size_strain: K must be > 0");
  require(peak.center > 0.0 && peak.center < 180.0, ErrorKind::OutOfRange,
          "size_strain: peak center outside (0, 180) degrees");

  double fl = peak.fwhm_l - opt.instrument_fwhm_l;
  double fg2 = peak.fwhm_g * peak.fwhm_g - opt.instrument_fwhm_g * opt.instrument_fwhm_g;
  double fg = fg2 > 0.0 ? std::sqrt(fg2) : 0.0;
  // d(fg)/d(peak.fwhm_g) for the quadrature subtraction
  const double dfg = fg > 0.0 ? peak.fwhm_g / fg : 1.0;
  const double sig_fl = peak.sigma.fwhm_l;
  const double sig_fg = peak.sigma.fwhm_g * dfg;

  require(fl > 0.0 && fl > sig_fl, ErrorKind::DegenerateBreadth,
          "size_strain: Lorentzian breadth is zero within uncertainty");
  require(fg > 0.0 && fg > sig_fg, ErrorKind::DegenerateBreadth,
          "size_strain: Gaussian breadth is zero within uncertainty");

  const double theta = 0.5 * peak.center * kDeg;
  const double sig_theta = 0.5 * peak.sigma.center * kDeg;
  const double beta_l = lorentz_integral_breadth(fl);
  const double beta_g = gauss_integral_breadth(fg);

  SizeStrainResult out;
  out.wavelength = opt.wavelength;
  out.k = opt.k;
  const double tau_angstrom = opt.k * opt.wavelength / (beta_l * std::cos(theta));
  out.tau_nm.value = tau_angstrom / 10.0;
  out.tau_nm.sigma = out.tau_nm.value *
                     std::hypot(sig_fl / fl, std::tan(theta) * sig_theta);
  const double eps = beta_g / (4.0 * std::tan(theta));
  out.epsilon_percent.value = 100.0 * eps;
  out.epsilon_percent.sigma =
      out.epsilon_percent.value *
      std::hypot(sig_fg / fg, sig_theta / (std::sin(theta) * std::cos(theta)));
  return out;
}

double bragg_d(double two_theta_deg, double wavelength) {
  require(wavelength > 0.0, ErrorKind::InvalidArgument, "bragg_d: wavelength must be > 0");
  require(std::isfinite(two_theta_deg) && two_theta_deg >= 1e-3 && two_theta_deg < 180.0,
          ErrorKind::OutOfRange, "bragg_d: 2theta must lie in [1e-3, 180) degrees");
  return wavelength / (2.0 * std::sin(0.5 * two_theta_deg * kDeg));
}

double bragg_two_theta(double d, double wavelength) {
  require(d > 0.0 && wavelength > 0.0, ErrorKind::InvalidArgument,
          "bragg_two_theta: d and wavelength must be > 0");
  const double s = wavelength / (2.0 * d);
  require(s <= 1.0, ErrorKind::OutOfRange, "bragg_two_theta: lambda > 2d, no reflection");
  return 2.0 * std::asin(s) / kDeg;
}

double lattice_param(double d, Reflection r, CrystalFamily family) {
  require(d > 0.0, ErrorKind::InvalidArgument, "lattice_param: d must be > 0");
  require(r.h != 0 || r.k != 0 || r.l != 0, ErrorKind::InvalidArgument,
          "lattice_param: (000) is not a reflection");
  if (family == CrystalFamily::Cubic) {
    return d * std::sqrt(static_cast<double>(r.h * r.h + r.k * r.k + r.l * r.l));
  }
  if (r.h == 0 && r.k == 0) return std::abs(r.l) * d;
  if (r.l == 0) return d * std::sqrt(static_cast<double>(r.h * r.h + r.k * r.k));
  fail(ErrorKind::InvalidArgument,
       "lattice_param: tetragonal (hkl) with l and (h,k) nonzero needs both a and c");
}

}  // namespace tiox::xrd
