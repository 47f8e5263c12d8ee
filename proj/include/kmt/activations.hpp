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

// Columnwise maps from attention scores to attention weights.
//
// Every map except Identity returns a point of the probability simplex;
// GumbelMax returns an exact one-hot sample.

#ifndef KMT_ACTIVATIONS_HPP
#define KMT_ACTIVATIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <variant>
#include <vector>

#include "kmt/matcore.hpp"

namespace kmt {

/// Scores within this distance of the column maximum count as maxima.
struct TieTolerance {
  double relative = 1e-9;
  double absolute = 1e-12;

  double around(double max_value) const {
    return std::max(absolute, relative * std::abs(max_value));
  }
};

namespace detail {

// exp() is exactly zero below this argument in double precision, so the call
// can be skipped without changing any result.
inline constexpr double kExpUnderflow = -745.2;

template <typename Scalar>
Scalar exp_or_zero(Scalar x) {
  return x < Scalar(kExpUnderflow) ? Scalar(0) : std::exp(x);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Softmax with inverse temperature gamma. gamma = 0 gives the uniform vector.
template <typename Derived>
VectorX<typename Derived::Scalar> softmax_gamma(const Eigen::MatrixBase<Derived>& a,
                                                typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  if (gamma < Scalar(0)) throw ConfigError("softmax_gamma: gamma must be >= 0");
  const Scalar top = a.maxCoeff();
  VectorX<Scalar> w(a.size());
  for (Index i = 0; i < a.size(); ++i) w[i] = detail::exp_or_zero(gamma * (a[i] - top));
  return w / w.sum();
}

/// Limiting softmax: uniform weight over the maximal entries.
template <typename Derived>
VectorX<typename Derived::Scalar> lsma(const Eigen::MatrixBase<Derived>& a,
                                       const TieTolerance& tol = {}) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = a.maxCoeff();
  const Scalar cut = top - Scalar(tol.around(static_cast<double>(top)));
  VectorX<Scalar> w = VectorX<Scalar>::Zero(a.size());
  Index count = 0;
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] >= cut) {
      w[i] = Scalar(1);
      ++count;
    }
  }
  return w / Scalar(count);
}

/// Divides by the sum. A nonpositive sum cannot be normalized.
template <typename Derived>
VectorX<typename Derived::Scalar> linear_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Scalar total = a.sum();
  if (!(total > Scalar(0))) throw DegenerateInputError("linear_norm: column sum is not positive");
  return a / total;
}

/// Euclidean projection of gamma * a onto the probability simplex.
template <typename Derived>
VectorX<typename Derived::Scalar> sparsemax(const Eigen::MatrixBase<Derived>& a,
                                            typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  if (!(gamma > Scalar(0))) throw ConfigError("sparsemax: gamma must be > 0");
  // Shift invariant; centering on the maximum keeps large offsets from
  // cancelling in the threshold.
  const VectorX<Scalar> z = gamma * (a.array() - a.maxCoeff()).matrix();
  std::vector<Scalar> sorted(z.data(), z.data() + z.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar prefix = 0;
  Scalar threshold = sorted[0] - Scalar(1);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const Scalar candidate = (prefix - Scalar(1)) / Scalar(k + 1);
    if (sorted[k] > candidate) threshold = candidate;
  }
  return (z.array() - threshold).max(Scalar(0)).matrix();
}

/// Infinity-norm regularized argmax over the simplex, argmax_z gamma<a,z> - max_i z_i.
///
/// The maximizer is uniform on a top-m set of the descending sort of a; m is
/// chosen to maximize (gamma * (sum of the top m) - 1) / m, smallest m on ties.
template <typename Derived>
VectorX<typename Derived::Scalar> normmax_inf(const Eigen::MatrixBase<Derived>& a,
                                              typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  if (!(gamma > Scalar(0))) throw ConfigError("normmax_inf: gamma must be > 0");
  std::vector<Index> order(static_cast<std::size_t>(a.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index l, Index r) { return a[l] > a[r]; });

  Scalar prefix = 0;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  std::size_t support = 1;
  for (std::size_t m = 1; m <= order.size(); ++m) {
    prefix += a[order[m - 1]];
    const Scalar value = (gamma * prefix - Scalar(1)) / Scalar(m);
    if (value > best) {
      best = value;
      support = m;
    }
  }
  VectorX<Scalar> w = VectorX<Scalar>::Zero(a.size());
  for (std::size_t m = 0; m < support; ++m) w[order[m]] = Scalar(1) / Scalar(support);
  return w;
}

/// Deterministic random stream keyed by up to three integers, e.g.
/// (base seed, layer, cluster). Streams with different keys are independent.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0)
      : engine_(detail::splitmix64(detail::splitmix64(detail::splitmix64(base) ^ a) ^ b)) {}

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard Gumbel draw.
  double gumbel() { return -std::log(-std::log(uniform_open())); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// One-hot sample of index i with probability softmax(a)^i (Gumbel-max).
template <typename Derived>
VectorX<typename Derived::Scalar> gumbel_argmax(const Eigen::MatrixBase<Derived>& a, SeedStream& rng) {
  using Scalar = typename Derived::Scalar;
  Index best = 0;
  Scalar best_value = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < a.size(); ++i) {
    const Scalar v = a[i] + Scalar(rng.gumbel());
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  VectorX<Scalar> w = VectorX<Scalar>::Zero(a.size());
  w[best] = Scalar(1);
  return w;
}

struct SoftmaxGamma {
  double gamma;
};
struct Limiting {
  TieTolerance tol{};
};
struct Linear {};
struct Sparsemax {
  double gamma;
};
struct NormmaxInf {
  double gamma;
};
/// Column c of a score matrix draws from SeedStream(seed, stream, c).
struct GumbelMax {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};
struct Identity {};

using ActivationKind =
    std::variant<SoftmaxGamma, Limiting, Linear, Sparsemax, NormmaxInf, GumbelMax, Identity>;

/// Applies the activation to one score column. `column` keys the random
/// stream for GumbelMax and is ignored otherwise.
template <typename Derived>
VectorX<typename Derived::Scalar> activate(const ActivationKind& kind,
                                           const Eigen::MatrixBase<Derived>& a, Index column) {
  using Scalar = typename Derived::Scalar;
  return std::visit(
      [&](const auto& act) -> VectorX<Scalar> {
        using T = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<T, SoftmaxGamma>) {
          return softmax_gamma(a, Scalar(act.gamma));
        } else if constexpr (std::is_same_v<T, Limiting>) {
          return lsma(a, act.tol);
        } else if constexpr (std::is_same_v<T, Linear>) {
          return linear_norm(a);
        } else if constexpr (std::is_same_v<T, Sparsemax>) {
          return sparsemax(a, Scalar(act.gamma));
        } else if constexpr (std::is_same_v<T, NormmaxInf>) {
          return normmax_inf(a, Scalar(act.gamma));
        } else if constexpr (std::is_same_v<T, GumbelMax>) {
          SeedStream rng(act.seed, act.stream, static_cast<std::uint64_t>(column));
          return gumbel_argmax(a, rng);
        } else {
          return a;
        }
      },
      kind);
}

/// Applies the activation to every column of a score matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> activate_columns(const ActivationKind& kind,
                                                   const Eigen::MatrixBase<Derived>& scores) {
  MatrixX<typename Derived::Scalar> out(scores.rows(), scores.cols());
  for (Index c = 0; c < scores.cols(); ++c) {
    out.col(c) = activate(kind, VectorX<typename Derived::Scalar>(scores.col(c)), c);
  }
  return out;
}

/// True for activations whose output columns lie on the simplex for all inputs.
inline bool is_simplex_map(const ActivationKind& kind) {
  return !std::holds_alternative<Identity>(kind) && !std::holds_alternative<Linear>(kind);
}

}  // namespace kmt

#endif  // KMT_ACTIVATIONS_HPP
