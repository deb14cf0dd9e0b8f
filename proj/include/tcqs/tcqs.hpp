#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "tcqs/cqs.hpp"
#include "tcqs/ranks.hpp"
#include "tcqs/sir.hpp"
#include "tcqs/transform.hpp"

namespace tcqs {

struct TcqsResult {
  SubspaceEstimate estimate;   // basis in whitened-score coordinates
  IterationState state;
  Eigen::MatrixXd gamma_hat;   // SIR directions on the whitened scores
  TransformedDesign transform; // fitted transform, reused for new data
};

// Rank-transform estimator: Gaussianize each predictor by normal scores,
// whiten, then run the full quantile-subspace machinery on the whitened
// scores. The returned basis lives in whitened-score coordinates.
inline TcqsResult tcqs_basis(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double tau, int d_target, const SirConfig& sir_cfg,
                             const EstimatorOptions& opts = {}) {
  TcqsResult res;
  res.transform = whiten(normal_scores(x));

  SirConfig cfg = sir_cfg;
  const SirResult sir = sir_directions(res.transform.z_g, y, cfg);
  res.gamma_hat = sir.basis;

  const CqsResult core = cqs_basis(res.transform.z_g, y, tau, d_target, sir.basis, opts);
  res.estimate = core.estimate;
  res.state = core.state;
  return res;
}

// Converts a whitened-coordinate basis to raw normal-score coordinates. A
// functional w'z equals (S^{-1/2} w)'(g - mean), so columns are mapped through
// the inverse root and renormalized; orthonormality generally does not survive
// the change of coordinates.
inline Eigen::MatrixXd raw_scale_basis(const TcqsResult& res) {
  Eigen::MatrixXd raw = res.transform.sigma_inv_sqrt * res.estimate.basis;
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    const double norm = raw.col(k).norm();
    if (!(norm > 0.0)) throw std::runtime_error("raw_scale_basis: degenerate column");
    raw.col(k) = fix_sign(raw.col(k) / norm);
  }
  return raw;
}

namespace detail {

// Per-column empirical CDF of the training data with linear interpolation
// between order statistics, on the r/(n+1) probability scale with midranks for
// ties. Training values reproduce their own probabilities exactly; new values
// outside the training range clip to 1/(n+1) or n/(n+1).
struct CdfTable {
  std::vector<double> values;  // sorted unique training values
  std::vector<double> probs;   // matching midrank/(n+1) probabilities

  double probability(double v) const {
    // Outside the training range: 0 or 1 here, clipped to 1/(n+1) or n/(n+1)
    // by the caller.
    if (v < values.front()) return 0.0;
    if (v > values.back()) return 1.0;
    if (v == values.front()) return probs.front();
    if (v == values.back()) return probs.back();
    const auto it = std::lower_bound(values.begin(), values.end(), v);
    const auto hi = static_cast<std::size_t>(it - values.begin());
    if (values[hi] == v) return probs[hi];
    const std::size_t lo = hi - 1;
    const double t = (v - values[lo]) / (values[hi] - values[lo]);
    return probs[lo] + t * (probs[hi] - probs[lo]);
  }
};

inline CdfTable build_cdf_table(const Eigen::VectorXd& column) {
  const Eigen::VectorXd r = column_ranks(column);
  const double denom = static_cast<double>(column.size() + 1);
  std::vector<std::pair<double, double>> pairs(static_cast<std::size_t>(column.size()));
  for (Eigen::Index i = 0; i < column.size(); ++i)
    pairs[static_cast<std::size_t>(i)] = {column[i], r[i] / denom};
  std::sort(pairs.begin(), pairs.end());
  CdfTable table;
  for (const auto& [v, p] : pairs) {
    if (!table.values.empty() && table.values.back() == v) continue;  // ties share midrank
    table.values.push_back(v);
    table.probs.push_back(p);
  }
  return table;
}

}  // namespace detail

// Maps new predictor rows through the training transform (interpolated
// empirical CDF, normal quantile, training centering and whitening) and
// projects onto the estimated basis.
inline Eigen::MatrixXd sufficient_predictors(const TcqsResult& res,
                                             const Eigen::MatrixXd& new_x,
                                             const Eigen::MatrixXd& train_x) {
  const Eigen::Index p = train_x.cols();
  if (new_x.cols() != p)
    throw std::invalid_argument("sufficient_predictors: column count mismatch");
  if (res.transform.g_hat.rows() != train_x.rows())
    throw std::invalid_argument("sufficient_predictors: train_x does not match the fitted transform");
  const Eigen::Index n = train_x.rows();
  const double lo = 1.0 / static_cast<double>(n + 1);
  const double hi = static_cast<double>(n) / static_cast<double>(n + 1);

  Eigen::MatrixXd g(new_x.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const detail::CdfTable table = detail::build_cdf_table(train_x.col(j));
    for (Eigen::Index i = 0; i < new_x.rows(); ++i) {
      const double prob = std::clamp(table.probability(new_x(i, j)), lo, hi);
      g(i, j) = inverse_normal_cdf(prob);
    }
  }
  const Eigen::MatrixXd z =
      (g.rowwise() - res.transform.g_mean.transpose()) * res.transform.sigma_inv_sqrt;
  return z * res.estimate.basis;
}

}  // namespace tcqs
