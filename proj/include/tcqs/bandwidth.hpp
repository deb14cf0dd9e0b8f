#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tcqs/normal.hpp"

namespace tcqs {

namespace detail {

//! Normal-scale fallback for the mean-regression bandwidth.
inline double normal_scale_bandwidth(double sd_x, Eigen::Index n) {
  return 1.06 * sd_x * std::pow(static_cast<double>(n), -0.2);
}

}  // namespace detail

//! Direct plug-in bandwidth for a local-linear mean fit. Quartic pilot fits on
//! four x-ordered blocks estimate the integrated squared curvature and the
//! residual variance, which enter the AMISE-optimal formula
//! h^5 = R(K) sigma^2 (b-a) / (n theta22) with R(K) = 1/(2 sqrt(pi)) for the
//! Gaussian kernel. Degenerate pilots (flat curvature, short blocks) fall back
//! to the normal-scale rule 1.06 sd(x) n^{-1/5}.
inline double mean_bandwidth(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.size();
  if (n != y.size()) throw std::invalid_argument("mean_bandwidth: length mismatch");
  if (n < 20) throw std::invalid_argument("mean_bandwidth: need at least 20 observations");
  const double mean_x = x.mean();
  const double sd_x = std::sqrt((x.array() - mean_x).square().sum() /
                                static_cast<double>(n - 1));
  if (!(sd_x > 0.0)) throw std::invalid_argument("mean_bandwidth: constant x");

  const double fallback = detail::normal_scale_bandwidth(sd_x, n);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });

  constexpr int kBlocks = 4;
  constexpr int kCoefs = 5;  // quartic polynomial
  const Eigen::Index dof = n - kBlocks * kCoefs;
  if (dof <= 0) return fallback;

  double theta_sum = 0.0;
  double rss = 0.0;
  Eigen::Index start = 0;
  for (int b = 0; b < kBlocks; ++b) {
    const Eigen::Index len = n / kBlocks + (b < n % kBlocks ? 1 : 0);
    if (len < kCoefs + 1) return fallback;
    Eigen::VectorXd xb(len), yb(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      xb[i] = x[order[static_cast<std::size_t>(start + i)]];
      yb[i] = y[order[static_cast<std::size_t>(start + i)]];
    }
    start += len;
    // Fit in block-standardized coordinates for conditioning; the second
    // derivative transforms back by 1/scale^2, keeping the result exactly
    // scale-equivariant.
    const double mu = xb.mean();
    const double sc = std::sqrt((xb.array() - mu).square().sum() /
                                static_cast<double>(len - 1));
    if (!(sc > 0.0)) return fallback;
    Eigen::MatrixXd design(len, kCoefs);
    for (Eigen::Index i = 0; i < len; ++i) {
      const double t = (xb[i] - mu) / sc;
      double pw = 1.0;
      for (int c = 0; c < kCoefs; ++c) {
        design(i, c) = pw;
        pw *= t;
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < kCoefs) return fallback;
    const Eigen::VectorXd beta = qr.solve(yb);
    rss += (yb - design * beta).squaredNorm();
    for (Eigen::Index i = 0; i < len; ++i) {
      const double t = (xb[i] - mu) / sc;
      const double m2 = (2.0 * beta[2] + 6.0 * beta[3] * t + 12.0 * beta[4] * t * t) /
                        (sc * sc);
      theta_sum += m2 * m2;
    }
  }

  const double theta22 = theta_sum / static_cast<double>(n);
  const double sigma2 = rss / static_cast<double>(dof);
  // Dimensionless degeneracy test; scale-equivariant by construction.
  if (!(sigma2 > 0.0) || !std::isfinite(theta22) ||
      theta22 * sd_x * sd_x * sd_x * sd_x <= 1e-10 * sigma2)
    return fallback;

  const double range = x.maxCoeff() - x.minCoeff();
  const double rk = 0.28209479177387814;  // 1 / (2 sqrt(pi))
  const double h5 = rk * sigma2 * range / (static_cast<double>(n) * theta22);
  const double h = std::pow(h5, 0.2);
  if (!std::isfinite(h) || !(h > 0.0)) return fallback;
  return h;
}

//! Rescales a mean-regression bandwidth to quantile level tau:
//! h_tau = h_mean * [tau(1-tau) / phi(Phi^{-1}(tau))^2]^{1/5}.
inline double quantile_bandwidth(double h_mean, double tau) {
  if (!(h_mean > 0.0))
    throw std::invalid_argument("quantile_bandwidth: h_mean must be positive");
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("quantile_bandwidth: tau must lie in (0,1)");
  const double dens = normal_pdf(inverse_normal_cdf(tau));
  return h_mean * std::pow(tau * (1.0 - tau) / (dens * dens), 0.2);
}

}  // namespace tcqs
