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

#include "kmt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace kmt {
namespace {

double sq_dist(const Matrix& a, Index i, const Matrix& b, Index j) {
  double s = 0.0;
  for (Index r = 0; r < a.rows(); ++r) {
    const double diff = a(r, i) - b(r, j);
    s += diff * diff;
  }
  return s;
}

void check_inputs(const Matrix& points, const Matrix& centers0, int T) {
  if (points.rows() < 1 || points.cols() < 1) throw ConfigError("oracle: need at least one point with d >= 1");
  if (centers0.rows() != points.rows()) throw ShapeError("oracle: centers and points differ in dimension");
  if (centers0.cols() < 1) throw ConfigError("oracle: need at least one center");
  if (centers0.cols() > points.cols()) throw ConfigError("oracle: k exceeds n");
  if (T < 1) throw ConfigError("oracle: T must be >= 1");
}

struct Labels {
  std::vector<int> label;
  bool tie = false;
};

// Best cluster of each point by score(i, j); larger is better.
template <typename ScoreFn>
Labels best_clusters(Index n, Index k, const TieTolerance& tol, ScoreFn score) {
  Labels out;
  out.label.resize(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index j = 0; j < k; ++j) {
      row[static_cast<std::size_t>(j)] = score(i, j);
      if (row[static_cast<std::size_t>(j)] > row[static_cast<std::size_t>(best)]) best = j;
    }
    const double top = row[static_cast<std::size_t>(best)];
    const double cut = top - tol.around(top);
    for (Index j = 0; j < k; ++j) {
      if (j != best && row[static_cast<std::size_t>(j)] >= cut) out.tie = true;
    }
    out.label[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Labels nearest(const Matrix& points, const Matrix& centers, const TieTolerance& tol) {
  return best_clusters(points.cols(), centers.cols(), tol,
                       [&](Index i, Index j) { return -sq_dist(points, i, centers, j); });
}

std::vector<std::vector<Index>> members_of(const std::vector<int>& label, Index k) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < label.size(); ++i) {
    members[static_cast<std::size_t>(label[i])].push_back(static_cast<Index>(i));
  }
  return members;
}

Vector grand_mean(const Matrix& points) { return points.rowwise().mean(); }

void finish(OracleResult& r) {
  const auto& a = r.assignments;
  if (a.size() >= 2 && a[a.size() - 1] == a[a.size() - 2]) {
    r.status = OracleStatus::Converged;
  } else {
    r.status = OracleStatus::MaxIter;
  }
}

void record(OracleResult& r, const Matrix& points, std::vector<int> labels, const Matrix& centers) {
  r.assignments.push_back(std::move(labels));
  r.centers.push_back(centers);
  r.objective.push_back(kmeans_objective(points, centers));
}

}  // namespace

std::string to_string(OracleStatus s) {
  switch (s) {
    case OracleStatus::Converged:
      return "converged";
    case OracleStatus::MaxIter:
      return "max_iter";
    case OracleStatus::TieDetected:
      return "tie";
    case OracleStatus::DegenerateCluster:
      return "degenerate";
  }
  return "unknown";
}

double kmeans_objective(const Matrix& points, const Matrix& centers) {
  if (points.rows() != centers.rows()) throw ShapeError("kmeans_objective: dimension mismatch");
  if (centers.cols() < 1) throw ShapeError("kmeans_objective: no centers");
  double total = 0.0;
  for (Index i = 0; i < points.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < centers.cols(); ++j) best = std::min(best, sq_dist(points, i, centers, j));
    total += best;
  }
  return total;
}

OracleResult lloyd(const Matrix& points, const Matrix& centers0, int T, const TieTolerance& tol) {
  check_inputs(points, centers0, T);
  const Index k = centers0.cols();
  OracleResult r;
  Matrix centers = centers0;
  for (int t = 0; t < T; ++t) {
    Labels lab = nearest(points, centers, tol);
    if (lab.tie) {
      r.status = OracleStatus::TieDetected;
      r.message = "assignment tie at iteration " + std::to_string(t + 1);
      return r;
    }
    const auto members = members_of(lab.label, k);
    for (Index j = 0; j < k; ++j) {
      const auto& m = members[static_cast<std::size_t>(j)];
      if (m.empty()) {
        centers.col(j) = grand_mean(points);
        continue;
      }
      Vector sum = Vector::Zero(points.rows());
      for (Index i : m) sum += points.col(i);
      centers.col(j) = sum / static_cast<double>(m.size());
    }
    record(r, points, std::move(lab.label), centers);
  }
  finish(r);
  return r;
}

OracleResult soft_kmeans(const Matrix& points, const Matrix& centers0, double gamma, int T) {
  check_inputs(points, centers0, T);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("soft_kmeans: gamma must be finite and > 0");
  const Index n = points.cols();
  const Index k = centers0.cols();
  OracleResult r;
  Matrix centers = centers0;
  for (int t = 0; t < T; ++t) {
    Matrix w(k, n);
    std::vector<int> heaviest(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < k; ++j) {
        w(j, i) = -gamma * sq_dist(points, i, centers, j);
        top = std::max(top, w(j, i));
      }
      double total = 0.0;
      for (Index j = 0; j < k; ++j) {
        w(j, i) = std::exp(w(j, i) - top);
        total += w(j, i);
      }
      Index best = 0;
      for (Index j = 0; j < k; ++j) {
        w(j, i) /= total;
        if (w(j, i) > w(best, i)) best = j;
      }
      heaviest[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    for (Index j = 0; j < k; ++j) {
      Vector sum = Vector::Zero(points.rows());
      double mass = 0.0;
      for (Index i = 0; i < n; ++i) {
        sum += w(j, i) * points.col(i);
        mass += w(j, i);
      }
      centers.col(j) = mass > 0.0 ? Vector(sum / mass) : grand_mean(points);
    }
    record(r, points, std::move(heaviest), centers);
  }
  finish(r);
  return r;
}

OracleResult spherical_lloyd(const Matrix& points, const Matrix& centers0, int T, const TieTolerance& tol) {
  check_inputs(points, centers0, T);
  for (Index i = 0; i < points.cols(); ++i) {
    if (std::abs(points.col(i).norm() - 1.0) > 1e-9) {
      throw ConfigError("spherical_lloyd: column " + std::to_string(i) + " is not unit norm");
    }
  }
  const Index k = centers0.cols();
  OracleResult r;
  Matrix centers = centers0;
  for (int t = 0; t < T; ++t) {
    Labels lab = best_clusters(points.cols(), k, tol, [&](Index i, Index j) {
      double s = 0.0;
      for (Index c = 0; c < points.rows(); ++c) s += points(c, i) * centers(c, j);
      return s;
    });
    if (lab.tie) {
      r.status = OracleStatus::TieDetected;
      r.message = "assignment tie at iteration " + std::to_string(t + 1);
      return r;
    }
    const auto members = members_of(lab.label, k);
    for (Index j = 0; j < k; ++j) {
      const auto& m = members[static_cast<std::size_t>(j)];
      Vector sum = Vector::Zero(points.rows());
      if (m.empty()) {
        sum = points.rowwise().sum();
      } else {
        for (Index i : m) sum += points.col(i);
      }
      const double norm = sum.norm();
      if (!(norm > 0.0)) {
        r.status = OracleStatus::DegenerateCluster;
        r.message = "cluster " + std::to_string(j) + " sums to zero at iteration " + std::to_string(t + 1);
        return r;
      }
      centers.col(j) = sum / norm;
    }
    record(r, points, std::move(lab.label), centers);
  }
  finish(r);
  return r;
}

OracleResult trimmed_kmeans(const Matrix& points, const Matrix& centers0, double tau, int T,
                            const TieTolerance& tol) {
  check_inputs(points, centers0, T);
  if (!(tau >= 0.0 && tau < 100.0)) throw ConfigError("trimmed_kmeans: tau must lie in [0, 100)");
  const Index k = centers0.cols();
  OracleResult r;
  Matrix centers = centers0;
  for (int t = 0; t < T; ++t) {
    Labels lab = nearest(points, centers, tol);
    if (lab.tie) {
      r.status = OracleStatus::TieDetected;
      r.message = "assignment tie at iteration " + std::to_string(t + 1);
      return r;
    }
    const auto members = members_of(lab.label, k);
    Matrix next = centers;
    for (Index j = 0; j < k; ++j) {
      const auto& m = members[static_cast<std::size_t>(j)];
      if (m.empty()) {
        next.col(j) = grand_mean(points);
        continue;
      }
      std::vector<double> dist;
      dist.reserve(m.size());
      for (Index i : m) dist.push_back(sq_dist(points, i, centers, j));
      std::vector<double> sorted = dist;
      std::sort(sorted.begin(), sorted.end());
      const auto rank = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(tau / 100.0 * static_cast<double>(m.size()))));
      const double rho = sorted[std::min(rank, sorted.size()) - 1];
      Vector sum = Vector::Zero(points.rows());
      std::size_t kept = 0;
      for (std::size_t p = 0; p < m.size(); ++p) {
        if (dist[p] <= rho) {
          sum += points.col(m[p]);
          ++kept;
        }
      }
      if (kept == 0) {
        r.status = OracleStatus::DegenerateCluster;
        r.message = "cluster " + std::to_string(j) + " fully trimmed";
        return r;
      }
      next.col(j) = sum / static_cast<double>(kept);
    }
    centers = next;
    record(r, points, std::move(lab.label), centers);
  }
  finish(r);
  return r;
}

OracleResult robust_kmeans(const Matrix& points, const Matrix& centers0, const RobustActivation& nact, int T,
                           const TieTolerance& tol) {
  check_inputs(points, centers0, T);
  std::visit([](const auto& a) {
    if (!(a.gamma > 0.0) || !std::isfinite(a.gamma)) throw ConfigError("robust_kmeans: gamma must be finite and > 0");
  }, nact);
  const Index k = centers0.cols();
  OracleResult r;
  Matrix centers = centers0;
  for (int t = 0; t < T; ++t) {
    Labels lab = nearest(points, centers, tol);
    if (lab.tie) {
      r.status = OracleStatus::TieDetected;
      r.message = "assignment tie at iteration " + std::to_string(t + 1);
      return r;
    }
    const auto members = members_of(lab.label, k);
    Matrix next = centers;
    for (Index j = 0; j < k; ++j) {
      const auto& m = members[static_cast<std::size_t>(j)];
      if (m.empty()) {
        next.col(j) = grand_mean(points);
        continue;
      }
      Vector scores(static_cast<Index>(m.size()));
      for (std::size_t p = 0; p < m.size(); ++p) scores[static_cast<Index>(p)] = -sq_dist(points, m[p], centers, j);
      const Vector w = std::visit(
          [&](const auto& a) -> Vector {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, SoftmaxGamma>) {
              return softmax_gamma(scores, a.gamma);
            } else {
              return sparsemax(scores, a.gamma);
            }
          },
          nact);
      Vector sum = Vector::Zero(points.rows());
      for (std::size_t p = 0; p < m.size(); ++p) sum += w[static_cast<Index>(p)] * points.col(m[p]);
      next.col(j) = sum;
    }
    centers = next;
    record(r, points, std::move(lab.label), centers);
  }
  finish(r);
  return r;
}

Matrix medoid_weights(const Matrix& points, const Matrix& centers, const std::vector<int>& labels, double delta) {
  const Index n = points.cols();
  const Index k = centers.cols();
  if (static_cast<Index>(labels.size()) != n) throw ShapeError("medoid_weights: one label per point expected");
  Matrix w(n, k);
  for (Index j = 0; j < k; ++j) {
    double top = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const double outside = labels[static_cast<std::size_t>(i)] == static_cast<int>(j) ? 0.0 : 1.0;
      w(i, j) = -sq_dist(points, i, centers, j) - 2.0 * delta * outside;
      top = std::max(top, w(i, j));
    }
    for (Index i = 0; i < n; ++i) w(i, j) = std::exp(w(i, j) - top);
    w.col(j) /= w.col(j).sum();
  }
  return w;
}

OracleResult randomized_kmedoids(const Matrix& points, const Matrix& centers0, double delta, int T,
                                 std::uint64_t seed, const TieTolerance& tol) {
  check_inputs(points, centers0, T);
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("randomized_kmedoids: delta must be finite and >= 0");
  for (Index j = 0; j < centers0.cols(); ++j) {
    bool found = false;
    for (Index i = 0; i < points.cols() && !found; ++i) found = points.col(i) == centers0.col(j);
    if (!found) throw ConfigError("randomized_kmedoids: initial center " + std::to_string(j) + " is not a data point");
  }
  const Index k = centers0.cols();
  OracleResult r;
  Matrix centers = centers0;
  for (int t = 0; t < T; ++t) {
    Labels lab = nearest(points, centers, tol);
    if (lab.tie) {
      r.status = OracleStatus::TieDetected;
      r.message = "assignment tie at iteration " + std::to_string(t + 1);
      return r;
    }
    const Matrix w = medoid_weights(points, centers, lab.label, delta);
    Matrix next(points.rows(), k);
    for (Index j = 0; j < k; ++j) {
      SeedStream rng(seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(j));
      std::discrete_distribution<Index> pick(w.col(j).data(), w.col(j).data() + w.rows());
      next.col(j) = points.col(pick(rng.engine()));
    }
    centers = next;
    record(r, points, std::move(lab.label), centers);
  }
  finish(r);
  return r;
}

}  // namespace kmt
