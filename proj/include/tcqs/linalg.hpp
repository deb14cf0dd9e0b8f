#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tcqs {

// Flips a vector so its first coordinate of non-negligible size is positive.
// Pins down the sign ambiguity of eigenvectors and normalized directions.
inline Eigen::VectorXd fix_sign(Eigen::VectorXd v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

// Symmetric inverse square root via eigendecomposition. `context` names the
// caller in the error when the matrix is numerically singular.
inline Eigen::MatrixXd symmetric_inv_sqrt(const Eigen::MatrixXd& s,
                                          const std::string& context) {
  if (s.rows() != s.cols())
    throw std::invalid_argument(context + ": matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error(context + ": eigendecomposition failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();  // ascending
  const double lam_max = lam[lam.size() - 1];
  if (!(lam_max > 0.0) || lam[0] <= 1e-10 * lam_max)
    throw std::runtime_error(context + ": covariance numerically singular (eigenvalue " +
                             std::to_string(lam[0]) + ")");
  const Eigen::VectorXd inv_sqrt = lam.array().sqrt().inverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

inline Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
  return m.colwise().mean();
}

// Sample covariance with the n-1 divisor.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& m) {
  if (m.rows() < 2)
    throw std::invalid_argument("sample_covariance: need at least 2 rows");
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(m.rows() - 1);
}

}  // namespace tcqs
