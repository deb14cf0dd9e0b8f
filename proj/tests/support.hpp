#pragma once

// Helpers shared by the unit tests and the acceptance runner: brute-force
// reference solvers and small utilities that act as independent oracles.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tcqs/kernel.hpp"
#include "tcqs/rng.hpp"

namespace testsupport {

// Check-loss objective evaluated directly from the definition.
inline double qr_objective(const Eigen::MatrixXd& design,
                           const Eigen::VectorXd& resp,
                           const Eigen::VectorXd& weights, double tau,
                           const Eigen::VectorXd& coef) {
  double total = 0.0;
  const Eigen::VectorXd resid = resp - design * coef;
  for (Eigen::Index i = 0; i < resid.size(); ++i)
    total += weights[i] * tcqs::check_loss(resid[i], tau);
  return total;
}

// Brute-force quantile regression. The objective is piecewise linear, so some
// optimum interpolates k observations exactly (k = coefficient count);
// enumerating every k-subset and keeping the best interpolant finds the global
// minimum on small instances.
inline double vertex_oracle(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& resp,
                            const Eigen::VectorXd& weights, double tau) {
  const int m = static_cast<int>(design.rows());
  const int k = static_cast<int>(design.cols());
  std::vector<int> comb(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    Eigen::MatrixXd sub(k, k);
    Eigen::VectorXd sy(k);
    for (int i = 0; i < k; ++i) {
      sub.row(i) = design.row(comb[static_cast<std::size_t>(i)]);
      sy[i] = resp[comb[static_cast<std::size_t>(i)]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (lu.isInvertible()) {
      const Eigen::VectorXd coef = lu.solve(sy);
      best = std::min(best, qr_objective(design, resp, weights, tau, coef));
    }
    int i = k - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

// Two-sided Kolmogorov statistic of sorted probability transforms against the
// uniform distribution.
inline double ks_statistic(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, std::abs(u[i] - (static_cast<double>(i) + 1.0) / n));
    d = std::max(d, std::abs(u[i] - static_cast<double>(i) / n));
  }
  return d;
}

// Angle in degrees between two nonzero vectors, ignoring orientation.
inline double angle_degrees(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c)) * 180.0 / 3.14159265358979323846;
}

// Random matrix with independent standard normal entries.
inline Eigen::MatrixXd random_matrix(tcqs::CounterRng& rng, Eigen::Index rows,
                                     Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  return m;
}

// Scratch directory for files the tests write and read back.
inline std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "tcqs_test_scratch";
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Redirects std::cout for the duration of a scope, for testing commands that
// print their results.
class CoutCapture {
 public:
  CoutCapture() : old_(std::cout.rdbuf(buffer_.rdbuf())) {}
  ~CoutCapture() { std::cout.rdbuf(old_); }
  std::string text() const { return buffer_.str(); }

 private:
  std::stringstream buffer_;
  std::streambuf* old_;
};

}  // namespace testsupport
