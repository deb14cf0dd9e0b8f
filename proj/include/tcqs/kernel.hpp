#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace tcqs {

enum class KernelKind { gaussian };

struct KernelConfig {
  KernelKind kind = KernelKind::gaussian;
  int dim = 1;
  double bandwidth = 1.0;
};

inline void validate_kernel(const KernelConfig& k) {
  if (k.dim < 1) throw std::invalid_argument("kernel: dim must be >= 1");
  if (!(k.bandwidth > 0.0))
    throw std::invalid_argument("kernel: bandwidth must be positive");
}

// Product of standard normal densities over the coordinates of u.
inline double gaussian_product_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& u) {
  const double c = std::pow(0.3989422804014327, static_cast<double>(u.size()));
  return c * std::exp(-0.5 * u.squaredNorm());
}

// Check loss: {tau - I(u < 0)} * u. Zero at zero, slope tau above, tau-1 below.
inline double check_loss(double u, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("check_loss: tau must lie in (0,1)");
  return (u < 0.0 ? tau - 1.0 : tau) * u;
}

}  // namespace tcqs
