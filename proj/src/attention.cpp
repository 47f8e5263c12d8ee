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

#include "kmt/attention.hpp"

#include <algorithm>
#include <string>

namespace kmt {
namespace {

constexpr Index kScoreBlockEntries = Index(1) << 22;

void check_head(const Matrix& queries, const Matrix& keys, const AttentionHead& head) {
  const Index dim = head.query.rows();
  const bool square = head.query.cols() == dim && head.key.rows() == dim && head.key.cols() == dim &&
                      head.value.rows() == dim && head.value.cols() == dim;
  if (!square) throw ShapeError("attention: Q, K, V must be square with a common dimension");
  if (queries.rows() != dim || keys.rows() != dim) {
    throw ShapeError("attention: token dimension " + std::to_string(queries.rows()) + "/" +
                     std::to_string(keys.rows()) + " does not match head dimension " +
                     std::to_string(dim));
  }
  if (keys.cols() < 1) throw ShapeError("attention: no keys");
}

// Projected keys and queries, shared by all query blocks.
struct Projected {
  Matrix keys;
  Matrix queries;
  Vector key_norms;    // NegSqEuclidean only
  Vector query_norms;  // NegSqEuclidean only
};

Projected project(const Matrix& queries, const Matrix& keys, const AttentionHead& head) {
  Projected p;
  p.keys = head.key * keys;
  p.queries = head.query * queries;
  if (head.score == Score::NegSqEuclidean) {
    // Distances are translation invariant; centering on the key mean keeps
    // the norm expansion well conditioned for data far from the origin.
    const Vector origin = p.keys.rowwise().mean();
    p.keys.colwise() -= origin;
    p.queries.colwise() -= origin;
    p.key_norms = p.keys.colwise().squaredNorm().transpose();
    p.query_norms = p.queries.colwise().squaredNorm().transpose();
  }
  return p;
}

// Scores for query columns [first, first + count).
Matrix block_scores(const Projected& p, Score score, Index first, Index count) {
  Matrix a = p.keys.transpose() * p.queries.middleCols(first, count);
  if (score == Score::NegSqEuclidean) {
    for (Index i = 0; i < count; ++i) {
      const double qn = p.query_norms[first + i];
      for (Index j = 0; j < a.rows(); ++j) {
        a(j, i) = std::min(0.0, 2.0 * a(j, i) - p.key_norms[j] - qn);
      }
    }
  }
  return a;
}

}  // namespace

Matrix score_matrix(const Matrix& queries, const Matrix& keys, const AttentionHead& head) {
  check_head(queries, keys, head);
  const Projected p = project(queries, keys, head);
  return block_scores(p, head.score, 0, queries.cols());
}

Matrix attend(const Matrix& queries, const Matrix& keys, const AttentionHead& head) {
  check_head(queries, keys, head);
  const Projected p = project(queries, keys, head);
  const Matrix values = head.value * keys;
  const Index n = queries.cols();
  const Index block = std::clamp<Index>(kScoreBlockEntries / keys.cols(), 1, std::max<Index>(n, 1));

  Matrix out = Matrix::Zero(head.dim(), n);
  for (Index first = 0; first < n; first += block) {
    const Index count = std::min(block, n - first);
    const Matrix scores = block_scores(p, head.score, first, count);
    for (Index i = 0; i < count; ++i) {
      const Vector w = activate(head.activation, scores.col(i), first + i);
      auto column = out.col(first + i);
      for (Index j = 0; j < w.size(); ++j) {
        if (w[j] != 0.0) column.noalias() += w[j] * values.col(j);
      }
    }
  }
  return out;
}

}  // namespace kmt
