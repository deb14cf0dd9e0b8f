#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tcqs/kernel.hpp"

namespace tcqs {

struct QrFit {
  Eigen::VectorXd coef;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

inline double qr_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& resp,
                           const Eigen::VectorXd& w, double tau,
                           const Eigen::VectorXd& coef) {
  double obj = 0.0;
  const Eigen::VectorXd r = resp - design * coef;
  for (Eigen::Index k = 0; k < r.size(); ++k)
    if (w[k] > 0.0) obj += w[k] * check_loss(r[k], tau);
  return obj;
}

// Exact descent on the piecewise-linear objective. Some minimizer interpolates
// k = #coefficients observations, so the iterate is first snapped to such a
// vertex; each step then releases one interpolated row along the steepest edge
// direction, and an exact line search over the residual breakpoints picks the
// blocking row that enters in its place. The objective is convex, so the
// no-descent-edge state is the global minimum.
inline void vertex_descent(const Eigen::MatrixXd& design, const Eigen::VectorXd& resp,
                           const Eigen::VectorXd& w, double tau,
                           Eigen::VectorXd& coef, double& obj) {
  const Eigen::Index m = design.rows();
  const Eigen::Index k = design.cols();

  // Snap to a vertex: greedily take small-residual rows whose design rows stay
  // linearly independent.
  std::vector<Eigen::Index> active;
  {
    const Eigen::VectorXd r = resp - design * coef;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(r[a]) < std::abs(r[b]);
    });
    Eigen::MatrixXd block(k, k);
    for (Eigen::Index idx : order) {
      const auto c = static_cast<Eigen::Index>(active.size());
      block.row(c) = design.row(idx);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(block.topRows(c + 1));
      qr.setThreshold(1e-10);
      if (qr.rank() == c + 1) active.push_back(idx);
      if (static_cast<Eigen::Index>(active.size()) == k) break;
    }
    if (static_cast<Eigen::Index>(active.size()) < k) return;
  }

  Eigen::VectorXd best_coef = coef;
  double best_obj = obj;
  std::vector<char> in_active(static_cast<std::size_t>(m), 0);

  for (int pivot = 0; pivot < 200; ++pivot) {
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      a.row(j) = design.row(active[static_cast<std::size_t>(j)]);
      b[j] = resp[active[static_cast<std::size_t>(j)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) break;
    coef = lu.solve(b);
    const Eigen::VectorXd r = resp - design * coef;
    obj = qr_objective(design, resp, w, tau, coef);
    if (obj < best_obj) {
      best_obj = obj;
      best_coef = coef;
    }

    std::fill(in_active.begin(), in_active.end(), 0);
    for (Eigen::Index idx : active) in_active[static_cast<std::size_t>(idx)] = 1;

    // Steepest edge over every (leaving row, orientation) pair. Each edge
    // direction d keeps the other interpolated rows fixed: a * d = sigma e_s.
    double best_g = -1e-12 * (1.0 + obj);
    Eigen::VectorXd best_dir;
    Eigen::Index leave = -1;
    for (Eigen::Index s = 0; s < k; ++s) {
      for (const double sigma : {1.0, -1.0}) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
        e[s] = sigma;
        const Eigen::VectorXd d = lu.solve(e);
        const Eigen::VectorXd xd = design * d;
        // the leaving row moves off zero, so its loss grows one-sidedly
        double g = w[active[static_cast<std::size_t>(s)]] *
                   (sigma > 0.0 ? 1.0 - tau : tau);
        for (Eigen::Index i = 0; i < m; ++i) {
          if (in_active[static_cast<std::size_t>(i)]) continue;
          const double v = xd[i];
          if (v == 0.0) continue;
          if (r[i] > 0.0)
            g -= w[i] * tau * v;
          else if (r[i] < 0.0)
            g -= w[i] * (tau - 1.0) * v;
          else
            g += w[i] * (v > 0.0 ? (1.0 - tau) * v : -tau * v);
        }
        if (g < best_g) {
          best_g = g;
          best_dir = d;
          leave = s;
        }
      }
    }
    if (leave < 0) break;  // no descent edge: global minimum

    // Walk the residual breakpoints along the edge until the slope turns up;
    // the row blocking there enters the interpolation set.
    const Eigen::VectorXd xd = design * best_dir;
    std::vector<std::pair<double, Eigen::Index>> steps;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_active[static_cast<std::size_t>(i)] || xd[i] == 0.0) continue;
      const double t = r[i] / xd[i];
      if (t > 0.0) steps.emplace_back(t, i);
    }
    if (steps.empty()) break;  // unreachable: the objective is coercive
    std::sort(steps.begin(), steps.end());
    double slope = best_g;
    Eigen::Index enter = -1;
    for (const auto& [t, i] : steps) {
      slope += w[i] * std::abs(xd[i]);
      if (slope >= 0.0) {
        enter = i;
        break;
      }
    }
    if (enter < 0) break;  // unreachable, as above
    active[static_cast<std::size_t>(leave)] = enter;
  }

  coef = best_coef;
  obj = best_obj;
}

}  // namespace detail

// Weighted linear quantile regression: iteratively reweighted least squares on
// the eps-smoothed check loss (eps halved each sweep) warm-starts an exact
// vertex descent, so the returned coefficients are a global minimizer.
inline QrFit weighted_linear_qr(const Eigen::MatrixXd& design, const Eigen::VectorXd& resp,
                                const Eigen::VectorXd& weights, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("weighted_linear_qr: tau must lie in (0,1)");
  if (design.rows() != resp.size() || design.rows() != weights.size())
    throw std::invalid_argument("weighted_linear_qr: row count mismatch");
  const Eigen::Index k = design.cols();
  if (k < 1) throw std::invalid_argument("weighted_linear_qr: empty design");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("weighted_linear_qr: negative weight");

  std::vector<Eigen::Index> pos;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights[i] > 0.0) pos.push_back(i);
  if (pos.empty()) throw std::invalid_argument("weighted_linear_qr: all weights zero");
  if (static_cast<Eigen::Index>(pos.size()) < k)
    throw std::invalid_argument("weighted_linear_qr: fewer positive-weight rows than coefficients");

  Eigen::MatrixXd dp(static_cast<Eigen::Index>(pos.size()), k);
  Eigen::VectorXd rp(static_cast<Eigen::Index>(pos.size()));
  Eigen::VectorXd wp(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t r = 0; r < pos.size(); ++r) {
    dp.row(static_cast<Eigen::Index>(r)) = design.row(pos[r]);
    rp[static_cast<Eigen::Index>(r)] = resp[pos[r]];
    wp[static_cast<Eigen::Index>(r)] = weights[pos[r]];
  }

  // Rank check on the weighted design; a deficient local design has no unique fit.
  {
    const Eigen::MatrixXd scaled = wp.array().sqrt().matrix().asDiagonal() * dp;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
      throw std::runtime_error("weighted_linear_qr: weighted design rank-deficient");
  }

  const double spread = rp.maxCoeff() - rp.minCoeff();
  double eps = 1e-6 * std::max(spread, 1e-12);

  // Weighted least squares start.
  Eigen::VectorXd coef = (dp.transpose() * wp.asDiagonal() * dp)
                             .ldlt()
                             .solve(dp.transpose() * (wp.asDiagonal() * rp));
  int iterations = 0;
  for (; iterations < 50; ++iterations) {
    const Eigen::VectorXd r = rp - dp * coef;
    Eigen::VectorXd ww(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double side = r[i] > 0.0 ? tau : 1.0 - tau;
      ww[i] = wp[i] * side / std::max(std::abs(r[i]), eps);
    }
    ww /= ww.maxCoeff();
    const Eigen::VectorXd next = (dp.transpose() * ww.asDiagonal() * dp)
                                     .ldlt()
                                     .solve(dp.transpose() * (ww.asDiagonal() * rp));
    const double step = (next - coef).cwiseAbs().maxCoeff();
    coef = next;
    eps = std::max(eps * 0.5, 1e-300);
    if (step < 1e-8) break;
  }

  // Zero-weight rows contribute nothing, so the objective is evaluated on the
  // positive-weight block throughout.
  double obj = detail::qr_objective(dp, rp, wp, tau, coef);

  // The smoothed iteration lands near the minimum; the exact descent finishes
  // the job from there.
  detail::vertex_descent(dp, rp, wp, tau, coef, obj);

  QrFit fit;
  fit.coef = coef;
  fit.objective = obj;
  fit.iterations = iterations;
  return fit;
}

}  // namespace tcqs
