#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcqs/bandwidth.hpp"
#include "tcqs/linalg.hpp"
#include "tcqs/llqr.hpp"
#include "tcqs/parallel.hpp"

namespace tcqs {

struct EstimatorOptions {
  double bandwidth_scale = 1.0;  // multiplies every smoothing bandwidth
  int threads = 1;               // parallelism across evaluation points
};

struct OlsFit {
  double intercept = 0.0;
  Eigen::VectorXd slope;
};

struct SubspaceEstimate {
  Eigen::MatrixXd basis;        // p x d, orthonormal columns, fixed signs
  Eigen::VectorXd eigenvalues;  // d largest, descending
};

struct IterationState {
  std::vector<Eigen::VectorXd> vectors;  // the generated direction sequence
  Eigen::MatrixXd v_matrix;              // vectors as columns
  Eigen::VectorXd eigenvalues;           // full spectrum of V V^T, descending
  std::vector<int> stalled;              // iteration indices that degenerated
};

struct CqsResult {
  SubspaceEstimate estimate;
  IterationState state;
};

// Exact least squares of response on [1 x] via a rank-revealing orthogonal
// decomposition.
inline OlsFit ols_slope(const Eigen::VectorXd& response, const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n != response.size()) throw std::invalid_argument("ols_slope: row count mismatch");
  if (n < x.cols() + 2) throw std::invalid_argument("ols_slope: too few rows");
  Eigen::MatrixXd design(n, x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 1e-10 * sv[0])
    throw std::runtime_error("ols_slope: design rank-deficient (smallest singular value " +
                             std::to_string(sv[sv.size() - 1]) + ")");
  const Eigen::VectorXd coef = svd.solve(response);
  OlsFit fit;
  fit.intercept = coef[0];
  fit.slope = coef.tail(x.cols());
  return fit;
}

namespace detail {

struct FittedQuantiles {
  Eigen::VectorXd values;
  double spread = 0.0;  // max - min, used for stall detection
};

// Fitted conditional quantiles at every sample point of y given the projected
// predictors. Each projected coordinate is standardized to unit variance so a
// single bandwidth drives the product kernel; the plug-in mean bandwidth is
// computed per coordinate on the standardized scale and combined by geometric
// mean before the quantile-level adjustment.
inline FittedQuantiles fitted_quantiles(const Eigen::MatrixXd& proj,
                                        const Eigen::VectorXd& y, double tau,
                                        const EstimatorOptions& opts) {
  const Eigen::Index n = proj.rows();
  const Eigen::Index d = proj.cols();
  if (n != y.size()) throw std::invalid_argument("fitted_quantiles: row count mismatch");

  Eigen::MatrixXd std_proj(n, d);
  double log_h = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mu = proj.col(j).mean();
    const double sd = std::sqrt((proj.col(j).array() - mu).square().sum() /
                                static_cast<double>(n - 1));
    if (!(sd > 0.0))
      throw std::runtime_error("fitted_quantiles: projected coordinate " +
                               std::to_string(j + 1) + " is constant");
    std_proj.col(j) = (proj.col(j).array() - mu) / sd;
    log_h += std::log(mean_bandwidth(std_proj.col(j), y));
  }
  const double h_mean = std::exp(log_h / static_cast<double>(d));
  double h = quantile_bandwidth(h_mean, tau) * opts.bandwidth_scale;
  if (!(h > 0.0)) throw std::invalid_argument("fitted_quantiles: bandwidth scale must be positive");

  KernelConfig kernel;
  kernel.dim = static_cast<int>(d);
  kernel.bandwidth = h;

  FittedQuantiles out;
  out.values.resize(n);
  parallel_for(static_cast<std::size_t>(n), opts.threads, [&](std::size_t i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.values[idx] =
        local_linear_quantile(std_proj, y, std_proj.row(idx), tau, kernel).q_hat;
  });
  out.spread = out.values.maxCoeff() - out.values.minCoeff();
  return out;
}

struct IterateStep {
  Eigen::VectorXd beta;
  double quantile_spread = 0.0;
};

inline IterateStep iterate_step(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                double tau, const Eigen::VectorXd& beta_prev,
                                const EstimatorOptions& opts) {
  if (beta_prev.size() != x.cols())
    throw std::invalid_argument("iterate_beta: beta_prev length mismatch");
  if (!(beta_prev.norm() > 0.0))
    throw std::invalid_argument("iterate_beta: beta_prev is zero");
  const FittedQuantiles q = fitted_quantiles(x * beta_prev, y, tau, opts);
  // Averaging against centered predictors keeps the direction invariant under
  // response shifts, which the raw average is not once the sample predictor
  // mean is nonzero.
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  IterateStep step;
  step.beta = centered.transpose() * q.values / static_cast<double>(x.rows());
  step.quantile_spread = q.spread;
  return step;
}

}  // namespace detail

// Seed direction: fitted quantiles given the a_hat projections, regressed on
// the full predictors; the slope is the seed.
inline Eigen::VectorXd initial_beta(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    double tau, const Eigen::MatrixXd& a_hat,
                                    const EstimatorOptions& opts = {}) {
  if (a_hat.rows() != x.cols())
    throw std::invalid_argument("initial_beta: a_hat row count must equal p");
  if (a_hat.cols() < 1) throw std::invalid_argument("initial_beta: a_hat has no columns");
  const detail::FittedQuantiles q = detail::fitted_quantiles(x * a_hat, y, tau, opts);
  return ols_slope(q.values, x).slope;
}

// One refinement sweep: average of fitted quantiles (given the previous
// direction's projections) against the centered predictors.
inline Eigen::VectorXd iterate_beta(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    double tau, const Eigen::VectorXd& beta_prev,
                                    const EstimatorOptions& opts = {}) {
  return detail::iterate_step(x, y, tau, beta_prev, opts).beta;
}

// Full estimator: seed from a_hat, early exit for one requested direction,
// otherwise p-1 refinement sweeps assembled into V whose top eigenvectors of
// V V^T form the basis.
inline CqsResult cqs_basis(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau,
                           int d_target, const Eigen::MatrixXd& a_hat,
                           const EstimatorOptions& opts = {}) {
  const Eigen::Index p = x.cols();
  if (d_target < 1 || d_target > p)
    throw std::invalid_argument("cqs_basis: d_target out of range");

  CqsResult res;
  Eigen::VectorXd beta0 = initial_beta(x, y, tau, a_hat, opts);
  res.state.vectors.push_back(beta0);

  if (d_target == 1) {
    const double norm = beta0.norm();
    if (!(norm > 0.0)) throw std::runtime_error("cqs_basis: degenerate seed direction");
    res.estimate.basis = fix_sign(beta0 / norm);
    res.estimate.eigenvalues = Eigen::VectorXd::Constant(1, beta0.squaredNorm());
    res.state.v_matrix = beta0;
    res.state.eigenvalues = res.estimate.eigenvalues;
    return res;
  }

  Eigen::VectorXd prev = beta0;
  for (Eigen::Index j = 1; j < p; ++j) {
    const detail::IterateStep step = detail::iterate_step(x, y, tau, prev, opts);
    const double scale = std::max(1.0, std::abs(step.quantile_spread));
    Eigen::VectorXd beta_j;
    if (step.quantile_spread <= 1e-10 || !(step.beta.norm() > 1e-14 * scale)) {
      // Degenerate sweep (flat fitted quantiles): carry the normalized previous
      // direction forward and record the stall.
      beta_j = prev / prev.norm();
      res.state.stalled.push_back(static_cast<int>(j));
    } else {
      beta_j = step.beta;
    }
    res.state.vectors.push_back(beta_j);
    prev = beta_j;
  }

  res.state.v_matrix.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) res.state.v_matrix.col(j) = res.state.vectors[static_cast<std::size_t>(j)];
  const Eigen::MatrixXd vvt = res.state.v_matrix * res.state.v_matrix.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(vvt);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("cqs_basis: eigendecomposition failed");
  res.state.eigenvalues = eig.eigenvalues().reverse();

  res.estimate.basis.resize(p, d_target);
  res.estimate.eigenvalues.resize(d_target);
  for (int k = 0; k < d_target; ++k) {
    res.estimate.basis.col(k) = fix_sign(eig.eigenvectors().col(p - 1 - k));
    res.estimate.eigenvalues[k] = res.state.eigenvalues[k];
  }
  return res;
}

}  // namespace tcqs
