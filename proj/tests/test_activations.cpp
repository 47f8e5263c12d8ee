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

#include <random>

#include "kmt/activations.hpp"

using namespace kmt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("softmax_gamma") {
  const Vector a = vec({1.0, 2.0, 3.0});
  const Vector w = softmax_gamma(a, 1.0);
  CHECK(w.sum() == doctest::Approx(1.0));
  CHECK(w[2] > w[1]);
  CHECK(softmax_gamma(a, 0.0).isApprox(Vector::Constant(3, 1.0 / 3.0)));
  const Vector shifted = softmax_gamma(Vector(a.array() + 1000.0), 1.0);
  CHECK((shifted - w).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(softmax_gamma(a, -1.0), ConfigError);
  // Huge inputs do not overflow.
  CHECK(softmax_gamma(vec({1e308, 0.0}), 10.0).allFinite());
}

TEST_CASE("lsma averages over ties") {
  CHECK(lsma(vec({1.0, 3.0, 3.0, 0.0})) == vec({0.0, 0.5, 0.5, 0.0}));
  CHECK(lsma(vec({0.0, 0.0, 0.0, 0.0})) == Vector::Constant(4, 0.25));
  CHECK(lsma(vec({-1.0, -5.0})) == vec({1.0, 0.0}));
}

TEST_CASE("linear_norm") {
  CHECK(linear_norm(vec({1.0, 3.0})) == vec({0.25, 0.75}));
  CHECK_THROWS_AS(linear_norm(vec({0.0, 0.0})), DegenerateInputError);
  CHECK_THROWS_AS(linear_norm(vec({1.0, -2.0})), DegenerateInputError);
}

TEST_CASE("sparsemax") {
  CHECK(sparsemax(vec({0.0, 0.0}), 1.0) == vec({0.5, 0.5}));
  const Vector w = sparsemax(vec({3.0, 0.0, -1.0}), 1.0);
  CHECK(w == vec({1.0, 0.0, 0.0}));
  const Vector p = sparsemax(vec({0.2, 0.1, -3.0}), 1.0);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[2] == 0.0);
  CHECK(p[0] - p[1] == doctest::Approx(0.1));
  CHECK_THROWS_AS(sparsemax(vec({1.0}), 0.0), ConfigError);
}

TEST_CASE("normmax_inf trims low entries and is uniform on the rest") {
  // Gains of (gamma * prefix - 1) / m: m=1 -> 9, m=2 -> 9.5, m=3 -> 6.33.
  const Vector w = normmax_inf(vec({10.0, 10.0, 0.0}), 1.0);
  CHECK(w == vec({0.5, 0.5, 0.0}));
  const Vector all = normmax_inf(vec({1.0, 1.0, 1.0}), 1.0);
  CHECK(all == Vector::Constant(3, 1.0 / 3.0));
  // Shift invariance.
  const Vector a = vec({0.3, -0.2, 0.25, -4.0});
  CHECK(normmax_inf(a, 3.0) == normmax_inf(Vector(a.array() - 17.0), 3.0));
  CHECK_THROWS_AS(normmax_inf(a, 0.0), ConfigError);
}

TEST_CASE("gumbel_argmax is reproducible and one-hot") {
  const Vector a = vec({0.0, 0.1, -0.3});
  SeedStream r1(7, 1, 2);
  SeedStream r2(7, 1, 2);
  for (int i = 0; i < 50; ++i) {
    const Vector w = gumbel_argmax(a, r1);
    CHECK(w == gumbel_argmax(a, r2));
    CHECK(w.sum() == 1.0);
    CHECK((w.array() * (1.0 - w.array()) == 0.0).all());
  }
  SeedStream r3(7, 1, 3);
  SeedStream r4(7, 1, 2);
  bool differs = false;
  for (int i = 0; i < 20; ++i) differs = differs || r3.uniform_open() != r4.uniform_open();
  CHECK(differs);
}

TEST_CASE("gumbel_argmax frequencies follow the softmax") {
  const Vector a = vec({0.0, std::log(2.0), std::log(3.0)});
  SeedStream rng(11);
  Vector counts = Vector::Zero(3);
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) counts += gumbel_argmax(a, rng);
  counts /= draws;
  CHECK(counts[0] == doctest::Approx(1.0 / 6.0).epsilon(0.08));
  CHECK(counts[1] == doctest::Approx(2.0 / 6.0).epsilon(0.05));
  CHECK(counts[2] == doctest::Approx(3.0 / 6.0).epsilon(0.05));
}

TEST_CASE("activate dispatches columnwise") {
  Matrix s(2, 3);
  s << 1, 0, 5, 0, 1, 5;
  const Matrix w = activate_columns(Limiting{}, s);
  CHECK(w.col(0) == vec({1.0, 0.0}));
  CHECK(w.col(1) == vec({0.0, 1.0}));
  CHECK(w.col(2) == vec({0.5, 0.5}));
  CHECK(activate_columns(Identity{}, s) == s);
  CHECK(is_simplex_map(SoftmaxGamma{1.0}));
  CHECK_FALSE(is_simplex_map(Linear{}));
  CHECK_FALSE(is_simplex_map(Identity{}));
}
