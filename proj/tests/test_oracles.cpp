/* Copyright 2026 The kmeans-transformer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kmt/oracles.hpp"

using namespace kmt;

namespace {

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

}  // namespace

TEST_CASE("kmeans_objective") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(3, 12, rng);
  CHECK(kmeans_objective(x, x) == 0.0);

  const Vector mean = x.rowwise().mean();
  const double at_mean = kmeans_objective(x, mean);
  CHECK(at_mean == doctest::Approx((x.colwise() - mean).squaredNorm()));
  for (int t = 0; t < 5; ++t) CHECK(kmeans_objective(x, random_matrix(3, 1, rng)) >= at_mean);

  const Matrix c = random_matrix(3, 4, rng);
  double loop = 0.0;
  for (Index i = 0; i < x.cols(); ++i) {
    double best = 1e300;
    for (Index j = 0; j < c.cols(); ++j) {
      double s = 0.0;
      for (Index r = 0; r < 3; ++r) s += (x(r, i) - c(r, j)) * (x(r, i) - c(r, j));
      best = std::min(best, s);
    }
    loop += best;
  }
  CHECK(kmeans_objective(x, c) == doctest::Approx(loop).epsilon(1e-14));
  CHECK_THROWS_AS(kmeans_objective(x, Matrix::Zero(2, 1)), ShapeError);
}

TEST_CASE("lloyd") {
  SUBCASE("separated pairs") {
    const OracleResult r = lloyd(row({0, 1, 10, 11}), row({0, 10}), 3);
    CHECK(r.centers[0] == row({0.5, 10.5}));
    CHECK(r.centers[2] == row({0.5, 10.5}));
    CHECK(r.assignments[0] == std::vector<int>{0, 0, 1, 1});
    CHECK(r.status == OracleStatus::Converged);
  }
  SUBCASE("k = 1 gives the grand mean") {
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(2, 7, rng);
    const OracleResult r = lloyd(x, x.leftCols(1), 1);
    CHECK((r.centers[0] - x.rowwise().mean()).norm() < 1e-15);
    CHECK(r.status == OracleStatus::MaxIter);
  }
  SUBCASE("final objective is at least the brute-force optimum") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = random_matrix(2, 8, rng);
      double best = 1e300;
      for (int mask = 1; mask < 255; ++mask) {
        Vector sum[2] = {Vector::Zero(2), Vector::Zero(2)};
        int count[2] = {0, 0};
        for (int i = 0; i < 8; ++i) {
          const int side = (mask >> i) & 1;
          sum[side] += x.col(i);
          ++count[side];
        }
        double cost = 0.0;
        for (int i = 0; i < 8; ++i) {
          const int side = (mask >> i) & 1;
          cost += (x.col(i) - sum[side] / count[side]).squaredNorm();
        }
        best = std::min(best, cost);
      }
      const OracleResult r = lloyd(x, x.leftCols(2), 10);
      if (r.status == OracleStatus::TieDetected) continue;
      CHECK(r.objective.back() >= best - 1e-12);
      for (std::size_t t = 1; t < r.objective.size(); ++t) CHECK(r.objective[t] <= r.objective[t - 1] + 1e-12);
    }
  }
  SUBCASE("ties are reported") {
    const OracleResult r = lloyd(row({0, 1, 2}), row({0, 2}), 3);
    CHECK(r.status == OracleStatus::TieDetected);
    CHECK(r.assignments.empty());
  }
  SUBCASE("empty cluster takes the grand mean") {
    const OracleResult r = lloyd(row({0, 1, 2, 3}), row({1, 100}), 1);
    CHECK(r.centers[0](0, 1) == 1.5);
  }
  CHECK_THROWS_AS(lloyd(row({0, 1}), row({0, 1, 2}), 1), ConfigError);
  CHECK_THROWS_AS(lloyd(row({0, 1}), row({0}), 0), ConfigError);
}

TEST_CASE("soft_kmeans") {
  std::mt19937_64 rng(4);
  SUBCASE("k = 1") {
    const Matrix x = random_matrix(2, 5, rng);
    CHECK((soft_kmeans(x, x.leftCols(1), 3.0, 1).centers[0] - x.rowwise().mean()).norm() < 1e-15);
  }
  SUBCASE("centers are weighted means of the softmax weights") {
    const Matrix x = random_matrix(2, 20, rng);
    const Matrix c = x.leftCols(3);
    const double gamma = 0.5;
    const OracleResult r = soft_kmeans(x, c, gamma, 1);
    for (Index j = 0; j < 3; ++j) {
      Vector num = Vector::Zero(2);
      double den = 0.0;
      for (Index i = 0; i < 20; ++i) {
        double z = 0.0;
        for (Index l = 0; l < 3; ++l) z += std::exp(-gamma * (x.col(i) - c.col(l)).squaredNorm());
        const double w = std::exp(-gamma * (x.col(i) - c.col(j)).squaredNorm()) / z;
        num += w * x.col(i);
        den += w;
      }
      CHECK((r.centers[0].col(j) - num / den).norm() < 1e-12);
    }
  }
  SUBCASE("large gamma follows lloyd") {
    Matrix x(1, 6);
    x << 0, 0.5, 1, 10, 10.5, 11;
    const OracleResult soft = soft_kmeans(x, row({0, 11}), 1e6, 5);
    const OracleResult hard = lloyd(x, row({0, 11}), 5);
    for (int t = 0; t < 5; ++t) CHECK((soft.centers[t] - hard.centers[t]).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK_THROWS_AS(soft_kmeans(row({0, 1}), row({0}), 0.0, 1), ConfigError);
}

TEST_CASE("spherical_lloyd") {
  SUBCASE("k = 1 over two unit vectors") {
    Matrix x(2, 2);
    x << 1, 0, 0, 1;
    const OracleResult r = spherical_lloyd(x, x.leftCols(1), 1);
    CHECK(r.centers[0](0, 0) == doctest::Approx(std::sqrt(0.5)));
    CHECK(r.centers[0](1, 0) == doctest::Approx(std::sqrt(0.5)));
  }
  SUBCASE("hemispheres") {
    Matrix x(2, 4);
    x << 0.6, 0.8, -0.6, -0.8, 0.8, 0.6, -0.8, -0.6;
    Matrix c(2, 2);
    c << 0, 0, 1, -1;
    const OracleResult r = spherical_lloyd(x, c, 3);
    CHECK(r.assignments[2] == std::vector<int>{0, 0, 1, 1});
  }
  SUBCASE("the center maximizes the summed dot product on the circle") {
    std::mt19937_64 rng(5);
    Matrix x = random_matrix(2, 9, rng);
    x.colwise().normalize();
    const OracleResult r = spherical_lloyd(x, x.leftCols(2), 1);
    REQUIRE(r.status != OracleStatus::TieDetected);
    for (Index j = 0; j < 2; ++j) {
      double best = -1e300;
      double best_angle = 0.0;
      for (int step = 0; step < 200000; ++step) {
        const double angle = 2.0 * M_PI * step / 200000.0;
        double s = 0.0;
        for (Index i = 0; i < 9; ++i) {
          if (r.assignments[0][static_cast<std::size_t>(i)] == j) s += std::cos(angle) * x(0, i) + std::sin(angle) * x(1, i);
        }
        if (s > best) {
          best = s;
          best_angle = angle;
        }
      }
      CHECK(std::abs(std::atan2(r.centers[0](1, j), r.centers[0](0, j)) - std::remainder(best_angle, 2 * M_PI)) <
            1e-4);
    }
  }
  SUBCASE("cancelling cluster") {
    Matrix x(2, 2);
    x << 1, -1, 0, 0;
    Matrix c(2, 1);
    c << 0, 1;
    CHECK(spherical_lloyd(x, c, 2).status == OracleStatus::DegenerateCluster);
  }
  CHECK_THROWS_AS(spherical_lloyd(row({2, 1}), row({1}), 1), ConfigError);
}

TEST_CASE("trimmed_kmeans") {
  std::mt19937_64 rng(6);
  SUBCASE("tau near 100 trims nothing") {
    const Matrix x = random_matrix(2, 30, rng);
    const OracleResult t = trimmed_kmeans(x, x.leftCols(3), 99.99, 5);
    const OracleResult l = lloyd(x, x.leftCols(3), 5);
    for (std::size_t i = 0; i < l.centers.size(); ++i) CHECK(t.centers[i] == l.centers[i]);
  }
  SUBCASE("a far outlier is excluded") {
    Matrix x = random_matrix(2, 11, rng, 0.3);
    x.col(10) << 100.0, 0.0;
    const OracleResult r = trimmed_kmeans(x, Matrix::Zero(2, 1), 90.0, 1);
    CHECK((r.centers[0] - x.leftCols(10).rowwise().mean()).norm() < 1e-14);
  }
  SUBCASE("the threshold is the nearest-rank order statistic") {
    const Matrix x = random_matrix(1, 13, rng);
    const Matrix c = Matrix::Zero(1, 1);
    for (double tau : {10.0, 33.0, 50.0, 75.0, 99.0}) {
      std::vector<double> d;
      for (Index i = 0; i < 13; ++i) d.push_back(x(0, i) * x(0, i));
      std::vector<double> sorted = d;
      std::sort(sorted.begin(), sorted.end());
      const double rho = sorted[static_cast<std::size_t>(std::ceil(tau / 100.0 * 13.0)) - 1];
      double sum = 0.0;
      int count = 0;
      for (Index i = 0; i < 13; ++i) {
        if (d[static_cast<std::size_t>(i)] <= rho) {
          sum += x(0, i);
          ++count;
        }
      }
      CHECK(trimmed_kmeans(x, c, tau, 1).centers[0](0, 0) == doctest::Approx(sum / count).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(trimmed_kmeans(row({0, 1}), row({0}), 100.0, 1), ConfigError);
}

TEST_CASE("robust_kmeans") {
  SUBCASE("equidistant members give the plain mean") {
    Matrix x(2, 4);
    x << 1, -1, 0, 0, 0, 0, 1, -1;
    CHECK(robust_kmeans(x, Matrix::Zero(2, 1), SoftmaxGamma{2.0}, 1).centers[0].norm() < 1e-16);
  }
  SUBCASE("line cluster {0, 1, 10}") {
    const double c = robust_kmeans(row({0, 1, 10}), row({0}), SoftmaxGamma{1.0}, 1).centers[0](0, 0);
    const double w1 = std::exp(-1.0);
    const double w2 = std::exp(-100.0);
    CHECK(c == doctest::Approx((w1 + 10 * w2) / (1 + w1 + w2)).epsilon(1e-14));
    CHECK(c < 11.0 / 3.0);
  }
  SUBCASE("sparsemax with large gamma drops the farthest member") {
    const double c = robust_kmeans(row({0, 1, 10}), row({0}), Sparsemax{1.0}, 1).centers[0](0, 0);
    // Scores 0, -1, -100: only the first two can carry weight, 1 and 0 here.
    CHECK(c == 0.0);
    const double softer = robust_kmeans(row({0, 0.3, 10}), row({0}), Sparsemax{1.0}, 1).centers[0](0, 0);
    CHECK(softer > 0.0);
    CHECK(softer < 0.3);
  }
}

TEST_CASE("randomized_kmedoids") {
  Matrix x(2, 6);
  x << 0, 1, 0, 8, 9, 8, 0, 0, 1, 8, 8, 9;
  const Matrix c0 = x(Eigen::all, std::vector<Index>{0, 3});
  SUBCASE("centers are data columns") {
    const OracleResult r = randomized_kmedoids(x, c0, 0.0, 10, 3);
    for (const Matrix& c : r.centers) {
      for (Index j = 0; j < 2; ++j) {
        bool found = false;
        for (Index i = 0; i < 6; ++i) found = found || x.col(i) == c.col(j);
        CHECK(found);
      }
    }
  }
  SUBCASE("frequencies follow the weights") {
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    for (double delta : {0.0, 0.5}) {
      const Matrix w = medoid_weights(x, c0, labels, delta);
      // Closed form for cluster 0 centered at the origin.
      double z = 0.0;
      for (Index i = 0; i < 6; ++i) z += std::exp(-x.col(i).squaredNorm() - (i < 3 ? 0.0 : 2.0 * delta));
      CHECK(w(1, 0) == doctest::Approx(std::exp(-1.0) / z));
      Matrix counts = Matrix::Zero(6, 2);
      const int draws = 10000;
      for (int s = 0; s < draws; ++s) {
        const OracleResult r = randomized_kmedoids(x, c0, delta, 1, static_cast<std::uint64_t>(s));
        for (Index j = 0; j < 2; ++j) {
          for (Index i = 0; i < 6; ++i) counts(i, j) += r.centers[0].col(j) == x.col(i) ? 1.0 : 0.0;
        }
      }
      CHECK((counts / draws - w).cwiseAbs().maxCoeff() < 0.02);
    }
  }
  SUBCASE("large delta keeps medoids inside their cluster") {
    Matrix near(2, 6);
    near << 0, 1, 0, 2, 3, 2, 0, 0, 1, 2, 2, 3;
    const Matrix c = near(Eigen::all, std::vector<Index>{0, 3});
    double widest = 0.0;
    for (Index i = 0; i < 6; ++i) {
      for (Index l = 0; l < 6; ++l) widest = std::max(widest, (near.col(i) - near.col(l)).squaredNorm());
    }
    int inside = 0;
    for (int s = 0; s < 10000; ++s) {
      const OracleResult r = randomized_kmedoids(near, c, 10.0 * widest, 1, static_cast<std::uint64_t>(s));
      inside += (r.centers[0].col(0)(0) < 1.5 ? 1 : 0);
    }
    CHECK(inside >= 9990);
  }
  CHECK_THROWS_AS(randomized_kmedoids(x, Matrix::Constant(2, 2, 0.5), 1.0, 1, 0), ConfigError);
  CHECK_THROWS_AS(randomized_kmedoids(x, c0, -1.0, 1, 0), ConfigError);
}
