#include "tiox/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tiox/error.hpp"
#include "tiox/lsq.hpp"
#include "tiox/stats.hpp"

namespace tiox::profiles {

namespace {

constexpr double kNm2ToCm2 = 1e-14;

// First z where the (interpolated) series crosses `level`.
std::optional<double> crossing(const std::vector<double>& z, const std::vector<double>& c,
                               double level) {
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double a = c[i] - level;
    const double b = c[i + 1] - level;
    if (a == 0.0) return z[i];
    if ((a > 0.0) != (b > 0.0)) return z[i] + (z[i + 1] - z[i]) * a / (a - b);
  }
  return std::nullopt;
}

// All crossings of `level`, as interpolated z positions.
std::vector<double> crossings(const std::vector<double>& z, const std::vector<double>& c,
                              double level) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double a = c[i] - level;
    const double b = c[i + 1] - level;
    if ((a >= 0.0) != (b >= 0.0)) out.push_back(z[i] + (z[i + 1] - z[i]) * a / (a - b));
  }
  return out;
}

}  // namespace

void DepthProfile::validate() const {
  const std::size_t n = z_nm.size();
  for (std::size_t i = 1; i < n; ++i) {
    require(z_nm[i] > z_nm[i - 1], ErrorKind::InvalidArgument,
            "depth profile: z must be strictly increasing");
  }
  for (const auto& ch : channels) {
    require(ch.values.size() == n, ErrorKind::InvalidArgument,
            "depth profile: channel " + ch.element + " length differs from z");
  }
}

const Channel& DepthProfile::channel(const std::string& element) const {
  for (const auto& ch : channels) {
    if (ch.element == element) return ch;
  }
  fail(ErrorKind::InvalidArgument, "depth profile has no channel '" + element + "'");
}

DepthProfile normalize(const DepthProfile& raw) {
  raw.validate();
  DepthProfile out = raw;
  for (auto& ch : out.channels) {
    double top = 0.0;
    for (double v : ch.values) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument,
              "normalize: channel " + ch.element + " has negative or non-finite counts");
      top = std::max(top, v);
    }
    require(top > 0.0, ErrorKind::AllZeroChannel, "normalize: channel " + ch.element + " is all zero");
    for (double& v : ch.values) v /= top;
  }
  return out;
}

double erfc_profile(double z, double c0, double z0, double length, double baseline) {
  return 0.5 * c0 * std::erfc((z - z0) / length) + baseline;
}

double diffusion_coefficient(double length_nm, double time_s) {
  require(time_s > 0.0, ErrorKind::InvalidArgument, "diffusion time must be > 0");
  return length_nm * length_nm / (4.0 * time_s) * kNm2ToCm2;
}

double diffusion_length(double d_cm2_s, double time_s) {
  require(time_s > 0.0 && d_cm2_s >= 0.0, ErrorKind::InvalidArgument,
          "diffusion_length: need t > 0 and D >= 0");
  return 2.0 * std::sqrt(d_cm2_s / kNm2ToCm2 * time_s);
}

DiffusionFit fit_diffusion(const DepthProfile& profile, const std::string& element,
                           const DiffusionOptions& opt) {
  profile.validate();
  require(opt.time_s > 0.0, ErrorKind::InvalidArgument, "fit_diffusion: time must be > 0");
  const auto& all_c = profile.channel(element).values;
  const auto& all_z = profile.z_nm;
  require(all_z.size() >= 8, ErrorKind::InvalidArgument, "fit_diffusion: need at least 8 points");

  // orientation and levels from the outer fifths
  const std::size_t n_all = all_z.size();
  const std::size_t fifth = std::max<std::size_t>(2, n_all / 5);
  const double head = stats::median(std::vector<double>(all_c.begin(), all_c.begin() + static_cast<std::ptrdiff_t>(fifth)));
  const double tail = stats::median(std::vector<double>(all_c.end() - static_cast<std::ptrdiff_t>(fifth), all_c.end()));
  const double lo_c = *std::min_element(all_c.begin(), all_c.end());
  const double hi_c = *std::max_element(all_c.begin(), all_c.end());
  require(hi_c > lo_c && std::abs(head - tail) >= 0.2 * (hi_c - lo_c), ErrorKind::MonotonicityViolation,
          "fit_diffusion: channel " + element + " is not step-like");

  const double half = 0.5 * (head + tail);
  const auto z_half = crossing(all_z, all_c, half);
  require(z_half.has_value(), ErrorKind::MonotonicityViolation,
          "fit_diffusion: channel " + element + " never crosses its half level");
  // a step crosses its half level in one place; noise only adds crossings nearby
  const auto all_half = crossings(all_z, stats::moving_average(all_c, 5), half);
  require(!all_half.empty() && all_half.back() - all_half.front() <= 0.2 * (all_z.back() - all_z.front()),
          ErrorKind::MonotonicityViolation,
          "fit_diffusion: channel " + element + " crosses its half level in several places");
  // 16% / 84% levels of the erfc step are at (z - z0)/L = -/+ 0.7
  const double a16 = tail + 0.16 * (head - tail);
  const double a84 = tail + 0.84 * (head - tail);
  const auto z16 = crossing(all_z, all_c, a16);
  const auto z84 = crossing(all_z, all_c, a84);
  double width0 = (z16 && z84) ? std::abs(*z16 - *z84) / (2.0 * 0.7) : 0.0;

  std::vector<double> dz(n_all - 1);
  for (std::size_t i = 0; i + 1 < n_all; ++i) dz[i] = all_z[i + 1] - all_z[i];
  const double spacing = stats::median(dz);

  std::pair<double, double> window;
  if (opt.window) {
    window = *opt.window;
  } else {
    const double reach = 4.0 * std::max(width0, 2.0 * spacing);
    window = head > tail ? std::pair{all_z.front(), *z_half + reach}
                         : std::pair{*z_half - reach, all_z.back()};
    // keep the full plateau on the opposite side
    if (head > tail) window.second = std::min(window.second, all_z.back());
    else window.first = std::max(window.first, all_z.front());
  }
  std::vector<double> z, c;
  for (std::size_t i = 0; i < n_all; ++i) {
    if (all_z[i] >= window.first && all_z[i] <= window.second) {
      z.push_back(all_z[i]);
      c.push_back(all_c[i]);
    }
  }
  require(z.size() >= 6, ErrorKind::InvalidArgument, "fit_diffusion: fit window holds fewer than 6 points");

  DiffusionFit out;
  out.time_s = opt.time_s;

  // sharp-interface limit: the 16-84% transition spans at most one interval
  if (width0 < spacing / 1.4) {
    out.length_nm = spacing;
    out.z0_nm = *z_half;
    out.c0 = head - tail;
    out.baseline = tail;
    out.resolution_limited = true;
    double ssr = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double r = erfc_profile(z[i], out.c0, out.z0_nm, out.length_nm, out.baseline) - c[i];
      ssr += r * r;
    }
    out.residual_rms = std::sqrt(ssr / static_cast<double>(z.size()));
    out.d_cm2_s = diffusion_coefficient(out.length_nm, opt.time_s);
    return out;
  }

  const std::size_t n = z.size();
  lsq::ResidualFn residuals = [&](const lsq::Vector& p) {
    lsq::Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      r[static_cast<Eigen::Index>(i)] = erfc_profile(z[i], p[0], p[1], std::abs(p[2]), p[3]) - c[i];
    }
    return r;
  };
  lsq::JacobianFn jacobian = [&](const lsq::Vector& p) {
    lsq::Matrix j(static_cast<Eigen::Index>(n), 4);
    const double len = std::abs(p[2]);
    const double sgn = p[2] >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (z[i] - p[1]) / len;
      const double g = std::exp(-u * u) / std::sqrt(std::numbers::pi);  // -(1/2) d erfc/du
      const auto row = static_cast<Eigen::Index>(i);
      j(row, 0) = 0.5 * std::erfc(u);
      j(row, 1) = p[0] * g / len;
      j(row, 2) = sgn * p[0] * g * u / len;
      j(row, 3) = 1.0;
    }
    return j;
  };
  lsq::Vector start(4);
  start << head - tail, *z_half, std::max(width0, spacing), tail;
  const lsq::Result fit = lsq::levenberg_marquardt(residuals, start, {}, jacobian);

  out.c0 = fit.params[0];
  out.z0_nm = fit.params[1];
  out.length_nm = std::abs(fit.params[2]);
  out.baseline = fit.params[3];
  out.z0_sigma_nm = fit.std_errors[1];
  out.length_sigma_nm = fit.std_errors[2];
  out.residual_rms = fit.rms;
  if (out.length_nm < spacing) {
    out.length_nm = spacing;
    out.resolution_limited = true;
  }
  out.d_cm2_s = diffusion_coefficient(out.length_nm, opt.time_s);
  // dD/dL = 2 D / L
  out.d_sigma_cm2_s = 2.0 * out.d_cm2_s * out.length_sigma_nm / out.length_nm;
  return out;
}

}  // namespace tiox::profiles
