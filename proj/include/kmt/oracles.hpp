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

// Plain-loop reference clustering algorithms.
//
// These are written independently of the attention machinery and serve as
// ground truth for it. They share its conventions: an empty cluster moves to
// the grand mean of the data, and assignment ties resolve to the lowest index
// but are reported.

#ifndef KMT_ORACLES_HPP
#define KMT_ORACLES_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "kmt/activations.hpp"
#include "kmt/matcore.hpp"

namespace kmt {

enum class OracleStatus { Converged, MaxIter, TieDetected, DegenerateCluster };

std::string to_string(OracleStatus s);

/// Entry t of each vector describes iteration t + 1. A run that stops on a tie
/// or a degenerate cluster keeps the iterations completed before it.
struct OracleResult {
  std::vector<std::vector<int>> assignments;
  std::vector<Matrix> centers;
  std::vector<double> objective;
  OracleStatus status = OracleStatus::MaxIter;
  std::string message;
};

/// Sum over points of the squared distance to the nearest center.
double kmeans_objective(const Matrix& points, const Matrix& centers);

OracleResult lloyd(const Matrix& points, const Matrix& centers0, int T, const TieTolerance& tol = {});

/// Weights softmax_j(-gamma ||x_i - c_j||^2); centers are weighted means.
/// Assignments record the heaviest cluster of each point.
OracleResult soft_kmeans(const Matrix& points, const Matrix& centers0, double gamma, int T);

/// Unit-norm data. Assigns by largest dot product and moves each center to
/// the normalized sum of its members.
OracleResult spherical_lloyd(const Matrix& points, const Matrix& centers0, int T, const TieTolerance& tol = {});

/// Keeps members whose squared distance is at most the nearest-rank
/// tau-th percentile of their cluster.
OracleResult trimmed_kmeans(const Matrix& points, const Matrix& centers0, double tau, int T,
                            const TieTolerance& tol = {});

using RobustActivation = std::variant<SoftmaxGamma, Sparsemax>;

/// Members are reweighted by the activation of their negative squared
/// distances to the center used for assignment.
OracleResult robust_kmeans(const Matrix& points, const Matrix& centers0, const RobustActivation& nact, int T,
                           const TieTolerance& tol = {});

/// Center j is redrawn from the data with probability proportional to
/// exp(-||x_i - c_j||^2 - 2 delta [i not in cluster j]), using the random
/// stream (seed, iteration, j).
OracleResult randomized_kmedoids(const Matrix& points, const Matrix& centers0, double delta, int T,
                                 std::uint64_t seed, const TieTolerance& tol = {});

/// Probabilities used by randomized_kmedoids for one center: column j holds
/// the sampling distribution over points for cluster j.
Matrix medoid_weights(const Matrix& points, const Matrix& centers, const std::vector<int>& labels, double delta);

}  // namespace kmt

#endif  // KMT_ORACLES_HPP
