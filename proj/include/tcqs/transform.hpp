#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "tcqs/linalg.hpp"
#include "tcqs/normal.hpp"
#include "tcqs/ranks.hpp"

namespace tcqs {

struct TransformedDesign {
  Eigen::MatrixXd g_hat;          // n x p normal scores
  Eigen::MatrixXd z_g;            // n x p whitened scores
  Eigen::MatrixXd sigma_g;        // p x p sample covariance of g_hat
  Eigen::MatrixXd sigma_inv_sqrt; // symmetric inverse square root of sigma_g
  Eigen::VectorXd g_mean;         // column means of g_hat, kept for new data
};

// Componentwise Gaussianization: each column is replaced by the normal quantile
// of its midrank scaled to (0,1) by n+1. Invariant under strictly increasing
// maps of any column, since only the ranks enter.
inline Eigen::MatrixXd normal_scores(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw std::invalid_argument("normal_scores: need at least 2 rows");
  Eigen::MatrixXd g(x.rows(), x.cols());
  const double denom = static_cast<double>(x.rows() + 1);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Eigen::VectorXd r = column_ranks(x.col(j));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      g(i, j) = inverse_normal_cdf(r[i] / denom);
  }
  return g;
}

// Centers the scores and applies the symmetric inverse square root of their
// sample covariance, so z_g has identity sample covariance.
inline TransformedDesign whiten(const Eigen::MatrixXd& g_hat) {
  TransformedDesign td;
  td.g_hat = g_hat;
  td.g_mean = column_means(g_hat);
  td.sigma_g = sample_covariance(g_hat);
  td.sigma_inv_sqrt = symmetric_inv_sqrt(td.sigma_g, "whiten");
  td.z_g = (g_hat.rowwise() - td.g_mean.transpose()) * td.sigma_inv_sqrt;
  return td;
}

}  // namespace tcqs
