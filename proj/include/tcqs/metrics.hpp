#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tcqs {

// Orthonormalizes the columns of a basis matrix via a rank-revealing QR.
// Throws if the columns are linearly dependent, since a subspace comparison
// against a degenerate basis is meaningless.
inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& basis,
                                         const std::string& context) {
  if (basis.rows() == 0 || basis.cols() == 0) {
    throw std::invalid_argument(context + ": basis matrix is empty");
  }
  if (basis.cols() > basis.rows()) {
    throw std::invalid_argument(
        context + ": basis has more columns than rows (" +
        std::to_string(basis.cols()) + " > " + std::to_string(basis.rows()) +
        ")");
  }
  if (!basis.allFinite()) {
    throw std::invalid_argument(context + ": basis contains non-finite values");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smax <= 0.0 || smin <= 1e-10 * smax) {
    throw std::invalid_argument(context +
                                ": basis columns are linearly dependent "
                                "(smallest singular value " +
                                std::to_string(smin) + ")");
  }
  return svd.matrixU();
}

// Orthogonal projection matrix onto the column span of a basis.
inline Eigen::MatrixXd projection_matrix(const Eigen::MatrixXd& basis,
                                         const std::string& context) {
  const Eigen::MatrixXd q = orthonormal_basis(basis, context);
  return q * q.transpose();
}

// Spectral-norm distance between the projections onto two subspaces.
// 0 means identical spans; 1 means some direction of one span is orthogonal
// to the whole other span. The subspaces may have different dimensions.
inline double distance_measure(const Eigen::MatrixXd& estimated,
                               const Eigen::MatrixXd& truth) {
  if (estimated.rows() != truth.rows()) {
    throw std::invalid_argument(
        "distance_measure: bases live in different ambient dimensions (" +
        std::to_string(estimated.rows()) + " vs " +
        std::to_string(truth.rows()) + ")");
  }
  const Eigen::MatrixXd diff = projection_matrix(estimated, "distance_measure") -
                               projection_matrix(truth, "distance_measure");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error(
        "distance_measure: eigendecomposition of the projector difference "
        "failed");
  }
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// Trace correlation between two subspaces of equal dimension d:
// sqrt(trace(Pe * Pt) / d), written via the eigenvalues of Qe' Qt Qt' Qe.
// 1 means identical spans, 0 mutually orthogonal ones.
inline double trace_correlation(const Eigen::MatrixXd& estimated,
                                const Eigen::MatrixXd& truth) {
  if (estimated.rows() != truth.rows()) {
    throw std::invalid_argument(
        "trace_correlation: bases live in different ambient dimensions (" +
        std::to_string(estimated.rows()) + " vs " +
        std::to_string(truth.rows()) + ")");
  }
  if (estimated.cols() != truth.cols()) {
    throw std::invalid_argument(
        "trace_correlation: subspace dimensions differ (" +
        std::to_string(estimated.cols()) + " vs " +
        std::to_string(truth.cols()) + ")");
  }
  const Eigen::MatrixXd qe = orthonormal_basis(estimated, "trace_correlation");
  const Eigen::MatrixXd qt = orthonormal_basis(truth, "trace_correlation");
  const Eigen::MatrixXd cross = qe.transpose() * qt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cross * cross.transpose());
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error(
        "trace_correlation: eigendecomposition of the alignment matrix "
        "failed");
  }
  const double mean_eig =
      std::max(0.0, eig.eigenvalues().mean());
  return std::sqrt(mean_eig);
}

}  // namespace tcqs
