#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcqs/linalg.hpp"

namespace tcqs {

struct SirConfig {
  int n_slices = 10;
  int target_dim = 1;
};

struct SirResult {
  Eigen::MatrixXd basis;        // p x target_dim, unit-norm columns, x scale
  Eigen::VectorXd eigenvalues;  // all p, descending; ratio diagnostics live here
  std::vector<int> slice_counts;
};

// Sliced inverse regression. Predictors are standardized by the symmetric
// inverse root of their covariance; observations are sliced by sorted response
// (equal frequency, remainder to the leading slices) or, when the response has
// at most n_slices distinct values, one slice per distinct value. Directions
// are the top eigenvectors of the weighted covariance of slice means, mapped
// back through the inverse root and normalized.
inline SirResult sir_directions(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const SirConfig& cfg) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n != y.size()) throw std::invalid_argument("sir_directions: row count mismatch");
  if (cfg.n_slices < 2) throw std::invalid_argument("sir_directions: need at least 2 slices");
  if (cfg.target_dim < 1 || cfg.target_dim > p)
    throw std::invalid_argument("sir_directions: target_dim out of range");
  if (n <= p) throw std::invalid_argument("sir_directions: need n > p");

  const Eigen::VectorXd mu = column_means(x);
  const Eigen::MatrixXd inv_sqrt = symmetric_inv_sqrt(sample_covariance(x), "sir_directions");
  const Eigen::MatrixXd z = (x.rowwise() - mu.transpose()) * inv_sqrt;

  // Slice assignment.
  std::vector<std::vector<Eigen::Index>> slices;
  std::vector<double> distinct(y.data(), y.data() + n);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2)
    throw std::invalid_argument("sir_directions: response is constant");
  if (static_cast<int>(distinct.size()) <= cfg.n_slices) {
    // Categorical mode: one slice per distinct response value.
    std::map<double, std::size_t> pos;
    for (std::size_t k = 0; k < distinct.size(); ++k) pos[distinct[k]] = k;
    slices.resize(distinct.size());
    for (Eigen::Index i = 0; i < n; ++i) slices[pos[y[i]]].push_back(i);
  } else {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return y[a] < y[b]; });
    const int h = cfg.n_slices;
    slices.resize(static_cast<std::size_t>(h));
    Eigen::Index start = 0;
    for (int s = 0; s < h; ++s) {
      const Eigen::Index len = n / h + (s < static_cast<int>(n % h) ? 1 : 0);
      for (Eigen::Index i = 0; i < len; ++i)
        slices[static_cast<std::size_t>(s)].push_back(order[static_cast<std::size_t>(start + i)]);
      start += len;
    }
  }

  SirResult res;
  for (const auto& s : slices) {
    if (s.size() < 2)
      throw std::runtime_error("sir_directions: slice with fewer than 2 observations (" +
                               std::to_string(s.size()) + "); reduce n_slices");
    res.slice_counts.push_back(static_cast<int>(s.size()));
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : slices) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p);
    for (Eigen::Index i : s) mean += z.row(i);
    mean /= static_cast<double>(s.size());
    const double weight = static_cast<double>(s.size()) / static_cast<double>(n);
    m += weight * mean.transpose() * mean;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("sir_directions: eigendecomposition failed");
  res.eigenvalues = eig.eigenvalues().reverse();
  res.basis.resize(p, cfg.target_dim);
  for (int k = 0; k < cfg.target_dim; ++k) {
    const Eigen::VectorXd u = eig.eigenvectors().col(p - 1 - k);
    Eigen::VectorXd beta = inv_sqrt * u;
    const double norm = beta.norm();
    if (!(norm > 0.0))
      throw std::runtime_error("sir_directions: degenerate direction");
    res.basis.col(k) = fix_sign(beta / norm);
  }
  return res;
}

}  // namespace tcqs
