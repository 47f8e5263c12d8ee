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

#ifndef KMT_ATTENTION_HPP
#define KMT_ATTENTION_HPP

#include "kmt/activations.hpp"
#include "kmt/matcore.hpp"

namespace kmt {

enum class Score {
  DotProduct,      // <K k_j, Q q_i>
  NegSqEuclidean,  // -||K k_j - Q q_i||^2
};

/// A single attention head. Q, K and V are square with the token dimension.
struct AttentionHead {
  Matrix query;
  Matrix key;
  Matrix value;
  Score score = Score::DotProduct;
  ActivationKind activation = Limiting{};

  Index dim() const { return query.rows(); }
};

/// Pre-activation scores, one column per query: keys.cols() x queries.cols().
Matrix score_matrix(const Matrix& queries, const Matrix& keys, const AttentionHead& head);

/// V * keys * act(A), with the activation applied to each column of the score
/// matrix A. Queries are processed in column blocks, so the full score matrix
/// is never materialized.
Matrix attend(const Matrix& queries, const Matrix& keys, const AttentionHead& head);

}  // namespace kmt

#endif  // KMT_ATTENTION_HPP
