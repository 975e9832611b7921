#include "tiox/spectra.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "tiox/error.hpp"
#include "tiox/lsq.hpp"
#include "tiox/stats.hpp"

namespace tiox::spectra {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

// Vertex of the parabola through three points.
double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d = (x0 - x1) * (x0 - x2) * (x1 - x2);
  if (d == 0.0) return x1;
  const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
  const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
  if (a >= 0.0) return x1;
  const double v = -b / (2.0 * a);
  return std::clamp(v, std::min(x0, x2), std::max(x0, x2));
}

bool matches(double x, double center, double tol) { return std::abs(x - center) <= tol; }

}  // namespace

std::string_view to_string(XUnit u) {
  switch (u) {
    case XUnit::Wavenumber: return "cm-1";
    case XUnit::THz: return "THz";
    case XUnit::Nanometer: return "nm";
    case XUnit::Second: return "s";
  }
  return "?";
}

XUnit parse_unit(std::string_view text) {
  const std::string t = lower(text);
  if (t == "cm-1" || t == "cm^-1" || t == "1/cm" || t == "wavenumber") return XUnit::Wavenumber;
  if (t == "thz") return XUnit::THz;
  if (t == "nm") return XUnit::Nanometer;
  if (t == "s" || t == "ms") return XUnit::Second;
  fail(ErrorKind::InvalidArgument, "unknown spectrum unit '" + std::string(text) + "'");
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Anatase: return "Anatase";
    case Phase::Rutile: return "Rutile";
    case Phase::Mixed: return "Mixed";
    case Phase::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(LineModel m) {
  return m == LineModel::Gaussian ? "gaussian" : "lorentzian";
}

LineModel parse_line_model(std::string_view text) {
  const std::string t = lower(text);
  if (t == "gaussian" || t == "gauss") return LineModel::Gaussian;
  if (t == "lorentzian" || t == "lorentz") return LineModel::Lorentzian;
  fail(ErrorKind::InvalidArgument, "unknown line model '" + std::string(text) + "'");
}

void Spectrum::validate() const {
  require(x.size() == y.size(), ErrorKind::InvalidArgument, "spectrum: x and y lengths differ");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), ErrorKind::InvalidArgument,
            "spectrum: non-finite value at point " + std::to_string(i));
  }
  if (x.size() < 2) return;
  const bool up = x[1] > x[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const bool ok = up ? x[i] > x[i - 1] : x[i] < x[i - 1];
    require(ok, ErrorKind::InvalidArgument,
            "spectrum: x not strictly monotone at point " + std::to_string(i));
  }
}

Spectrum convert(const Spectrum& s, XUnit to) {
  s.validate();
  if (s.unit == to) return s;
  const bool optical = [](XUnit a, XUnit b) {
    return (a == XUnit::Nanometer && b == XUnit::THz) || (a == XUnit::THz && b == XUnit::Nanometer);
  }(s.unit, to);
  require(optical, ErrorKind::InvalidArgument,
          "convert: only nm <-> THz conversion is defined");
  Spectrum out = s;
  out.unit = to;
  for (double& v : out.x) {
    require(v > 0.0, ErrorKind::InvalidArgument, "convert: non-positive abscissa");
    v = kLightNmTHz / v;
  }
  if (out.x.size() > 1 && out.x[1] < out.x[0]) {
    std::reverse(out.x.begin(), out.x.end());
    std::reverse(out.y.begin(), out.y.end());
  }
  return out;
}

void PhononModeTable::validate() const {
  for (const auto* list : {&anatase, &rutile}) {
    for (const auto& m : *list) {
      require(m.center > 0.0, ErrorKind::InvalidArgument, "mode table: center must be > 0");
      require(m.tolerance > 0.0, ErrorKind::InvalidArgument, "mode table: tolerance must be > 0");
      require(m.weight > 0.0, ErrorKind::InvalidArgument, "mode table: weight must be > 0");
    }
  }
}

PhononModeTable default_mode_table() {
  PhononModeTable t;
  t.rutile = {{"R E_g", 449.0, 8.0, 1.0}, {"R A_1g", 614.0, 8.0, 1.0}};
  t.anatase = {{"A E_g", 144.0, 8.0, 2.0},
               {"A B_1g", 399.0, 8.0, 1.0},
               {"A A_1g", 515.0, 8.0, 1.0},
               {"A E_g", 639.0, 8.0, 1.0}};
  return t;
}

std::vector<Peak> detect_peaks(const Spectrum& s, double min_prominence) {
  s.validate();
  const std::size_t n = s.x.size();
  require(n >= 10, ErrorKind::InvalidArgument, "detect_peaks: need at least 10 points");
  require(min_prominence >= 0.0, ErrorKind::InvalidArgument,
          "detect_peaks: min_prominence must be >= 0");

  std::size_t width = std::max<std::size_t>(11, n / 3);
  if (width % 2 == 0) ++width;
  const std::vector<double> base = stats::running_median(s.y, width);
  std::vector<double> sig(n);
  for (std::size_t i = 0; i < n; ++i) sig[i] = s.y[i] - base[i];
  const std::vector<double> smooth = stats::moving_average(sig, 3);
  const double top = *std::max_element(smooth.begin(), smooth.end());
  if (!(top > 0.0)) return {};
  const double floor = min_prominence * top;

  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1])) continue;
    double left_min = smooth[i];
    for (std::size_t j = i; j-- > 0;) {
      if (smooth[j] > smooth[i]) break;
      left_min = std::min(left_min, smooth[j]);
    }
    double right_min = smooth[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (smooth[j] > smooth[i]) break;
      right_min = std::min(right_min, smooth[j]);
    }
    const double prom = smooth[i] - std::max(left_min, right_min);
    if (prom <= 0.0 || prom < floor) continue;
    const double c = parabolic_vertex(s.x[i - 1], smooth[i - 1], s.x[i], smooth[i], s.x[i + 1], smooth[i + 1]);
    peaks.push_back({c, smooth[i], prom});
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.center < b.center; });
  return peaks;
}

Classification classify_phase(const std::vector<double>& centers, const PhononModeTable& table,
                              const ClassifyOptions& opt) {
  table.validate();
  Classification out;
  std::vector<double> scored;
  for (double c : centers) {
    LabeledPeak lp{c, "", false};
    for (const auto& band : opt.substrate_masks) {
      if (matches(c, band.center, band.tolerance)) lp.label = band.label + " (masked)";
    }
    for (const auto& band : opt.fluorescence) {
      if (lp.label.empty() && matches(c, band.center, band.tolerance)) lp.label = band.label;
    }
    if (lp.label.empty()) {
      lp.scored = true;
      scored.push_back(c);
      for (const auto* list : {&table.anatase, &table.rutile}) {
        for (const auto& m : *list) {
          if (matches(c, m.center, m.tolerance)) {
            lp.label = lp.label.empty() ? m.label : lp.label + "/" + m.label;
          }
        }
      }
    }
    out.labels.push_back(std::move(lp));
  }

  auto score = [&scored](const std::vector<PhononMode>& modes) {
    double total = 0.0, hit = 0.0;
    for (const auto& m : modes) {
      total += m.weight;
      if (std::any_of(scored.begin(), scored.end(),
                      [&m](double c) { return matches(c, m.center, m.tolerance); })) {
        hit += m.weight;
      }
    }
    return total > 0.0 ? hit / total : 0.0;
  };
  out.anatase_score = score(table.anatase);
  out.rutile_score = score(table.rutile);
  const bool a = out.anatase_score >= opt.threshold && out.anatase_score > 0.0;
  const bool r = out.rutile_score >= opt.threshold && out.rutile_score > 0.0;
  out.phase = a && r ? Phase::Mixed : a ? Phase::Anatase : r ? Phase::Rutile : Phase::Unknown;
  return out;
}

Classification classify_phase(const std::vector<Peak>& peaks, const PhononModeTable& table,
                              const ClassifyOptions& opt) {
  std::vector<double> centers;
  centers.reserve(peaks.size());
  for (const auto& p : peaks) centers.push_back(p.center);
  return classify_phase(centers, table, opt);
}

double line_shape(LineModel m, double dx, double fwhm) {
  fwhm = std::abs(fwhm);
  if (fwhm == 0.0) return dx == 0.0 ? 1.0 : 0.0;
  const double u = 2.0 * dx / fwhm;
  if (m == LineModel::Lorentzian) return 1.0 / (1.0 + u * u);
  return std::exp(-std::numbers::ln2 * u * u);
}

double LineFit::evaluate_thz(double nu) const {
  return amplitude * line_shape(model, (nu - center_thz) * 1000.0, fwhm_ghz) + background;
}

LineFit fit_line(const Spectrum& s, LineModel model) {
  s.validate();
  require(s.unit == XUnit::THz || s.unit == XUnit::Nanometer, ErrorKind::InvalidArgument,
          "fit_line: spectrum must be in THz or nm");
  const std::size_t n = s.x.size();
  require(n >= 10, ErrorKind::IllPosed, "fit_line: need at least 10 points");

  // work on increasing abscissa
  std::vector<double> x = s.x;
  std::vector<double> y = s.y;
  if (x[1] < x[0]) {
    std::reverse(x.begin(), x.end());
    std::reverse(y.begin(), y.end());
  }
  const std::size_t edge = std::max<std::size_t>(3, n / 10);
  std::vector<double> edges(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(edge));
  edges.insert(edges.end(), y.end() - static_cast<std::ptrdiff_t>(edge), y.end());
  const double bg0 = stats::median(edges);
  std::vector<double> net(n);
  for (std::size_t i = 0; i < n; ++i) net[i] = y[i] - bg0;
  const std::vector<double> smooth = stats::moving_average(net, 3);
  const auto it = std::max_element(smooth.begin(), smooth.end());
  const std::size_t ip = static_cast<std::size_t>(it - smooth.begin());
  const double amp0 = *it;
  const double noise = stats::difference_noise(net);
  require(amp0 > 0.0 && amp0 > 3.0 * noise, ErrorKind::IllPosed,
          "fit_line: no resonance above 3x noise");
  require(ip > 0 && ip + 1 < n, ErrorKind::IllPosed, "fit_line: resonance at the edge of the range");
  std::size_t left = ip, right = ip;
  while (left > 0 && smooth[left] > 0.5 * amp0) --left;
  while (right + 1 < n && smooth[right] > 0.5 * amp0) ++right;
  double width0 = x[right] - x[left];
  if (width0 <= 0.0) width0 = 2.0 * (x[1] - x[0]);

  // fit in units relative to the peak for conditioning
  const double x0 = x[ip];
  const double scale = width0;
  lsq::ResidualFn residuals = [&](const lsq::Vector& p) {
    lsq::Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - x0) / scale;
      r[static_cast<Eigen::Index>(i)] = p[2] * line_shape(model, u - p[0], p[1]) + p[3] - y[i];
    }
    return r;
  };
  lsq::Vector start(4);
  start << 0.0, 1.0, amp0, bg0;
  lsq::Options opt;
  lsq::Vector typical(4);
  typical << 1.0, 1.0, amp0, std::max(std::abs(bg0), amp0);
  opt.typical_scale = typical;
  const lsq::Result fit = lsq::levenberg_marquardt(residuals, start, opt);

  const double center = x0 + fit.params[0] * scale;
  const double fwhm = std::abs(fit.params[1]) * scale;
  const double sig_center = fit.std_errors[0] * scale;
  const double sig_fwhm = fit.std_errors[1] * scale;
  require(center > x.front() && center < x.back(), ErrorKind::IllPosed,
          "fit_line: fitted center outside range");
  require(fit.params[2] > 0.0, ErrorKind::IllPosed, "fit_line: fitted amplitude not positive");

  LineFit out;
  out.model = model;
  out.amplitude = fit.params[2];
  out.background = fit.params[3];
  out.sigma.amplitude = fit.std_errors[2];
  out.sigma.background = fit.std_errors[3];
  out.residual_rms = fit.rms;
  if (s.unit == XUnit::THz) {
    out.center_thz = center;
    out.fwhm_ghz = 1000.0 * fwhm;
    out.sigma.center_thz = sig_center;
    out.sigma.fwhm_ghz = 1000.0 * sig_fwhm;
  } else {
    // |d nu / d lambda| = c / lambda^2
    const double jac = kLightNmTHz / (center * center);
    out.center_thz = kLightNmTHz / center;
    out.fwhm_ghz = 1000.0 * fwhm * jac;
    out.sigma.center_thz = sig_center * jac;
    out.sigma.fwhm_ghz = 1000.0 * sig_fwhm * jac;
  }
  return out;
}

LifetimeFit fit_lifetime(const Spectrum& decay) {
  decay.validate();
  require(decay.unit == XUnit::Second, ErrorKind::InvalidArgument,
          "fit_lifetime: decay trace must have time in seconds");
  const std::size_t n = decay.x.size();
  require(n >= 10, ErrorKind::IllPosed, "fit_lifetime: need at least 10 points");
  const auto& t = decay.x;
  const auto& y = decay.y;
  require(t[1] > t[0], ErrorKind::InvalidArgument, "fit_lifetime: time must increase");

  const std::size_t tail = std::max<std::size_t>(3, n / 10);
  const double bg0 = stats::median(std::vector<double>(y.end() - static_cast<std::ptrdiff_t>(tail), y.end()));
  const double head = stats::median(std::vector<double>(y.begin(), y.begin() + 3));
  const double amp0 = head - bg0;
  require(amp0 > 0.0, ErrorKind::IllPosed, "fit_lifetime: trace does not decay");
  // 1/e crossing as the starting lifetime
  double tau0 = (t.back() - t.front()) / 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] - bg0 <= amp0 / std::numbers::e) {
      tau0 = std::max(t[i] - t.front(), t[1] - t[0]);
      break;
    }
  }
  const double t0 = t.front();
  lsq::ResidualFn residuals = [&](const lsq::Vector& p) {
    lsq::Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      r[static_cast<Eigen::Index>(i)] = p[0] * std::exp(-(t[i] - t0) / (tau0 * p[1])) + p[2] - y[i];
    }
    return r;
  };
  lsq::JacobianFn jacobian = [&](const lsq::Vector& p) {
    lsq::Matrix j(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (t[i] - t0) / tau0;
      const double e = std::exp(-s / p[1]);
      const auto row = static_cast<Eigen::Index>(i);
      j(row, 0) = e;
      j(row, 1) = p[0] * e * s / (p[1] * p[1]);
      j(row, 2) = 1.0;
    }
    return j;
  };
  lsq::Vector start(3);
  start << amp0, 1.0, bg0;
  const lsq::Result fit = lsq::levenberg_marquardt(residuals, start, {}, jacobian);
  require(fit.params[1] > 0.0 && fit.params[0] > 0.0, ErrorKind::IllPosed,
          "fit_lifetime: fit did not produce a decaying exponential");

  LifetimeFit out;
  const double tau = tau0 * fit.params[1];
  out.t1_ms = 1000.0 * tau;
  out.t1_sigma_ms = 1000.0 * tau0 * fit.std_errors[1];
  out.amplitude = fit.params[0];
  out.amplitude_sigma = fit.std_errors[0];
  out.background = fit.params[2];
  out.background_sigma = fit.std_errors[2];
  out.residual_rms = fit.rms;
  require(t.back() - t.front() >= 3.0 * tau, ErrorKind::WindowTooShort,
          "fit_lifetime: trace covers less than 3 lifetimes");
  return out;
}

}  // namespace tiox::spectra
