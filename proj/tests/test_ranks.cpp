#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>

#include "tcqs/ranks.hpp"
#include "tcqs/rng.hpp"

using Catch::Matchers::ContainsSubstring;

TEST_CASE("distinct values rank by order", "[ranks]") {
  Eigen::VectorXd x(3);
  x << 3.2, 1.1, 2.5;
  const Eigen::VectorXd r = tcqs::column_ranks(x);
  CHECK(r[0] == 3.0);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 2.0);
}

TEST_CASE("ties share the average of their positions", "[ranks]") {
  Eigen::VectorXd x(3);
  x << 5.0, 5.0, 1.0;
  const Eigen::VectorXd r = tcqs::column_ranks(x);
  CHECK(r[0] == 2.5);
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 1.0);
}

TEST_CASE("a constant column ranks to the midpoint everywhere", "[ranks]") {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 3.7);
  const Eigen::VectorXd r = tcqs::column_ranks(x);
  for (int i = 0; i < 4; ++i) CHECK(r[i] == 2.5);
}

TEST_CASE("rank sum is always n(n+1)/2", "[ranks]") {
  tcqs::CounterRng rng(101);
  for (int n : {1, 2, 5, 40}) {
    Eigen::VectorXd x(n);
    // round to one decimal so ties actually occur
    for (int i = 0; i < n; ++i)
      x[i] = std::round(rng.next_normal() * 10.0) / 10.0;
    const Eigen::VectorXd r = tcqs::column_ranks(x);
    CHECK(r.sum() == Catch::Approx(n * (n + 1) / 2.0).margin(1e-9));
  }
}

TEST_CASE("ranks commute with row permutations", "[ranks]") {
  tcqs::CounterRng rng(102);
  const int n = 30;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i)
    x[i] = std::round(rng.next_normal() * 5.0) / 5.0;
  const Eigen::VectorXd r = tcqs::column_ranks(x);

  // reverse is a permutation; ranks of the reversed vector are the reversed ranks
  const Eigen::VectorXd xr = x.reverse();
  const Eigen::VectorXd rr = tcqs::column_ranks(xr);
  for (int i = 0; i < n; ++i) CHECK(rr[i] == r[n - 1 - i]);
}

TEST_CASE("ranks ignore strictly monotone relabeling", "[ranks]") {
  tcqs::CounterRng rng(103);
  Eigen::VectorXd x(25);
  for (int i = 0; i < 25; ++i)
    x[i] = std::round(rng.next_normal() * 4.0) / 4.0;
  const Eigen::VectorXd a = tcqs::column_ranks(x);
  const Eigen::VectorXd b = tcqs::column_ranks(x.array().exp().matrix());
  for (int i = 0; i < 25; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("empty and non-finite input is rejected", "[ranks]") {
  const Eigen::VectorXd empty(0);
  CHECK_THROWS_MATCHES(tcqs::column_ranks(empty), std::invalid_argument,
                       Catch::Matchers::MessageMatches(ContainsSubstring("empty column")));

  Eigen::VectorXd x(3);
  x << 1.0, std::numeric_limits<double>::quiet_NaN(), 2.0;
  CHECK_THROWS_MATCHES(tcqs::column_ranks(x), std::invalid_argument,
                       Catch::Matchers::MessageMatches(ContainsSubstring("row 2")));

  x[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(tcqs::column_ranks(x), std::invalid_argument);
}
