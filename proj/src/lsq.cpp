#include "tiox/lsq.hpp"

#include <cmath>
#include <string>

#include "tiox/error.hpp"

namespace tiox::lsq {

Matrix numerical_jacobian(const ResidualFn& residuals, const Vector& p, const Vector& steps) {
  const Vector r0 = residuals(p);
  Matrix jac(r0.size(), p.size());
  Vector q = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = steps[j];
    q[j] = p[j] + h;
    const Vector rp = residuals(q);
    q[j] = p[j] - h;
    const Vector rm = residuals(q);
    q[j] = p[j];
    jac.col(j) = (rp - rm) / (2.0 * h);
  }
  return jac;
}

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

Result levenberg_marquardt(const ResidualFn& residuals, Vector p, const Options& opt,
                           const JacobianFn& jacobian) {
  const Eigen::Index m = p.size();
  auto jac_at = [&](const Vector& x) -> Matrix {
    if (jacobian) return jacobian(x);
    Vector steps(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      double scale = std::abs(x[j]);
      if (opt.typical_scale) scale = std::max(scale, std::abs((*opt.typical_scale)[j]));
      if (scale == 0.0) scale = 1.0;
      steps[j] = opt.diff_step * scale;
    }
    return numerical_jacobian(residuals, x, steps);
  };

  Vector r = residuals(p);
  require(r.size() >= m, ErrorKind::IllPosed, "least squares: fewer residuals than parameters");
  if (!all_finite(r)) fail(ErrorKind::NonConvergence, "least squares: non-finite residuals at start");
  double ssr = r.squaredNorm();
  double lambda = opt.initial_lambda;

  Result out;
  bool converged = ssr == 0.0;
  int iter = 0;
  while (!converged && iter < opt.max_iterations) {
    ++iter;
    const Matrix jac = jac_at(p);
    const Matrix a = jac.transpose() * jac;
    const Vector g = jac.transpose() * r;
    Vector diag = a.diagonal();
    for (Eigen::Index j = 0; j < m; ++j) diag[j] = std::max(diag[j], 1e-12 * (a.diagonal().maxCoeff() + 1e-300));

    bool accepted = false;
    while (!accepted) {
      Matrix damped = a;
      damped.diagonal() += lambda * diag;
      const Vector step = damped.ldlt().solve(-g);
      const Vector trial = p + step;
      const Vector r_trial = residuals(trial);
      const double ssr_trial = all_finite(r_trial) ? r_trial.squaredNorm() : INFINITY;
      if (ssr_trial < ssr) {
        const double drop = ssr - ssr_trial;
        const bool small_step = step.norm() <= opt.relative_tolerance * (p.norm() + opt.relative_tolerance);
        p = trial;
        r = r_trial;
        ssr = ssr_trial;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        converged = drop <= opt.relative_tolerance * ssr || small_step || ssr == 0.0;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // no descent direction left: stationary point
          accepted = true;
          converged = true;
        }
      }
    }
  }
  if (!converged) {
    fail(ErrorKind::NonConvergence,
         "least squares: no convergence within " + std::to_string(opt.max_iterations) + " iterations");
  }

  const Matrix jac = jac_at(p);
  const Eigen::Index n = r.size();
  const double dof = n > m ? static_cast<double>(n - m) : 1.0;
  const Matrix info = jac.transpose() * jac;
  const Matrix inv = info.completeOrthogonalDecomposition().pseudoInverse();
  out.params = p;
  out.covariance = inv * (ssr / dof);
  out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.ssr = ssr;
  out.rms = std::sqrt(ssr / static_cast<double>(n));
  out.iterations = iter;
  return out;
}

}  // namespace tiox::lsq
