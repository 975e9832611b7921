#pragma once

// Damped least squares (Levenberg-Marquardt) for small dense problems.

#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace tiox::lsq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Residuals r(p), length n >= number of parameters.
using ResidualFn = std::function<Vector(const Vector&)>;
// Jacobian dr/dp (n x m). When absent, central differences are used.
using JacobianFn = std::function<Matrix(const Vector&)>;

struct Options {
  int max_iterations = 200;
  double relative_tolerance = 1e-9;
  double initial_lambda = 1e-3;
  // step for numerical derivatives, relative to max(|p_i|, typical_scale_i)
  double diff_step = 1e-6;
  std::optional<Vector> typical_scale;
};

struct Result {
  Vector params;
  Matrix covariance;   // s^2 (J^T J)^-1, s^2 = SSR / (n - m)
  Vector std_errors;   // sqrt(diag(covariance))
  double ssr = 0.0;    // sum of squared residuals
  double rms = 0.0;    // sqrt(SSR / n)
  int iterations = 0;
};

// Throws NonConvergence when the iteration cap is reached without meeting
// the tolerance, or when residuals become non-finite.
Result levenberg_marquardt(const ResidualFn& residuals, Vector start, const Options& opt = {},
                           const JacobianFn& jacobian = {});

Matrix numerical_jacobian(const ResidualFn& residuals, const Vector& p, const Vector& steps);

}  // namespace tiox::lsq
