#include "tiox/stats.hpp"

#include <algorithm>
#include <cmath>

namespace tiox::stats {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t width) {
  const std::size_t n = values.size();
  const std::size_t half = width / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += values[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<double> running_median(std::span<const double> values, std::size_t width) {
  const std::size_t n = values.size();
  const std::size_t half = width / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    out[i] = median(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(lo),
                                        values.begin() + static_cast<std::ptrdiff_t>(hi + 1)));
  }
  return out;
}

double difference_noise(std::span<const double> values) {
  if (values.size() < 3) return 0.0;
  std::vector<double> diff(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) diff[i] = values[i + 1] - values[i];
  const double m = median(diff);
  for (double& d : diff) d = std::abs(d - m);
  return 1.4826 * median(diff) / std::sqrt(2.0);
}

}  // namespace tiox::stats
