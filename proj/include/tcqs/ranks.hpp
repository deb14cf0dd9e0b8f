#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcqs {

// Ranks based at 1 with midranks for ties: a run of equal values shares the
// average of the positions it occupies, so the rank sum is always n(n+1)/2.
inline Eigen::VectorXd column_ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw std::invalid_argument("column_ranks: empty column");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(v[i]))
      throw std::invalid_argument("column_ranks: non-finite value at row " +
                                  std::to_string(i + 1));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  Eigen::VectorXd r(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) hold the tied run; midrank in 1-based terms.
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) r[order[k]] = mid;
    i = j + 1;
  }
  return r;
}

}  // namespace tcqs
