#pragma once

// Small robust-statistics helpers shared by the fitting modules.

#include <span>
#include <vector>

namespace tiox::stats {

double median(std::vector<double> values);

// Centered moving average, window shrinks at the ends.
std::vector<double> moving_average(std::span<const double> values, std::size_t width);

// Centered running median, window shrinks at the ends.
std::vector<double> running_median(std::span<const double> values, std::size_t width);

// Noise standard deviation estimated from first differences
// (1.4826 * MAD(diff) / sqrt(2)); insensitive to smooth signal.
double difference_noise(std::span<const double> values);

}  // namespace tiox::stats
