#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "tcqs/kernel.hpp"
#include "tcqs/weighted_qr.hpp"

namespace tcqs {

struct LocalFit {
  double q_hat = 0.0;
  Eigen::VectorXd s_hat;    // local slope in the projected coordinates
  int effective_points = 0;
  double bandwidth = 0.0;   // bandwidth actually used after any escalation
};

// Local-linear conditional quantile at eval_point: weighted check-loss fit of
// y on (proj - eval_point) with Gaussian product-kernel weights. A Gaussian
// weight is never exactly zero, so "effective" counts rows within a relative
// factor 1e-12 of the largest weight; rows below it are dropped from the fit.
// Sparse neighborhoods escalate by doubling the bandwidth (at most 10 times)
// rather than failing, since boundary points at tail quantile levels would
// otherwise abort whole runs.
inline LocalFit local_linear_quantile(const Eigen::MatrixXd& projected,
                                      const Eigen::VectorXd& y,
                                      const Eigen::RowVectorXd& eval_point, double tau,
                                      const KernelConfig& kernel) {
  validate_kernel(kernel);
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("local_linear_quantile: tau must lie in (0,1)");
  if (projected.rows() != y.size())
    throw std::invalid_argument("local_linear_quantile: row count mismatch");
  if (projected.cols() != kernel.dim || eval_point.size() != projected.cols())
    throw std::invalid_argument("local_linear_quantile: dimension mismatch");
  const Eigen::Index n = projected.rows();
  const Eigen::Index d = projected.cols();
  if (n < d + 2)
    throw std::invalid_argument("local_linear_quantile: need at least d*+2 observations");

  const Eigen::MatrixXd diff = projected.rowwise() - eval_point;
  Eigen::MatrixXd design(n, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = diff;

  double h = kernel.bandwidth;
  for (int attempt = 0; attempt <= 10; ++attempt, h *= 2.0) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
      w[i] = gaussian_product_kernel(diff.row(i) / h);
    const double w_max = w.maxCoeff();
    if (!(w_max > 0.0)) continue;
    int effective = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (w[i] >= 1e-12 * w_max)
        ++effective;
      else
        w[i] = 0.0;
    }
    if (effective < d + 2) continue;
    try {
      const QrFit fit = weighted_linear_qr(design, y, w, tau);
      LocalFit out;
      out.q_hat = fit.coef[0];
      out.s_hat = fit.coef.tail(d);
      out.effective_points = effective;
      out.bandwidth = h;
      return out;
    } catch (const std::runtime_error&) {
      // Numerically degenerate local design: widen the window and retry.
      continue;
    }
  }
  throw std::runtime_error(
      "local_linear_quantile: fewer than d*+2 usable points after 10 bandwidth doublings");
}

}  // namespace tcqs
