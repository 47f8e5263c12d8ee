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

// Dense-matrix building blocks for the k-means transformer.
//
// Points, centers and tokens are stored as columns. All functions accept any
// Eigen dense expression and return plain matrices of the same scalar type.

#ifndef KMT_MATCORE_HPP
#define KMT_MATCORE_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "kmt/errors.hpp"

namespace kmt {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Pairwise negative squared distances: entry (j, i) is -||c_j - x_i||^2.
///
/// Computed from explicit differences, so dp(X, X) has an exactly zero
/// diagonal and every entry is <= 0.
template <typename DerivedC, typename DerivedX>
MatrixX<typename DerivedC::Scalar> dp(const Eigen::MatrixBase<DerivedC>& centers,
                                      const Eigen::MatrixBase<DerivedX>& points) {
  if (centers.rows() != points.rows()) {
    throw ShapeError("dp: centers have " + std::to_string(centers.rows()) +
                     " rows, points have " + std::to_string(points.rows()));
  }
  MatrixX<typename DerivedC::Scalar> out(centers.cols(), points.cols());
  for (Index i = 0; i < points.cols(); ++i) {
    for (Index j = 0; j < centers.cols(); ++j) {
      out(j, i) = -(centers.col(j) - points.col(i)).squaredNorm();
    }
  }
  return out;
}

/// Appends `extra` rows of zeros.
template <typename Derived>
MatrixX<typename Derived::Scalar> zero_pad_rows(const Eigen::MatrixBase<Derived>& m, Index extra) {
  if (extra < 0) throw ShapeError("zero_pad_rows: negative row count");
  MatrixX<typename Derived::Scalar> out =
      MatrixX<typename Derived::Scalar>::Zero(m.rows() + extra, m.cols());
  out.topRows(m.rows()) = m;
  return out;
}

/// Lifted representation: each column x becomes [x; ||x||^2; -1/2].
template <typename Derived>
MatrixX<typename Derived::Scalar> lift(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index d = x.rows();
  MatrixX<Scalar> out(d + 2, x.cols());
  out.topRows(d) = x;
  out.row(d) = x.colwise().squaredNorm();
  out.row(d + 1).setConstant(Scalar(-0.5));
  return out;
}

/// Twice the matrix that swaps coordinates i-1 and i (1-based) of a
/// d-vector. With i = d + 2 on lifted vectors,
/// lift(x)^T perm_op(d + 2, d + 2) lift(y) = -||x - y||^2.
template <typename Scalar = double>
MatrixX<Scalar> perm_op(Index i, Index d) {
  if (i <= 1 || i > d) {
    throw IndexError("perm_op: index " + std::to_string(i) + " outside (1, " +
                     std::to_string(d) + "]");
  }
  MatrixX<Scalar> p = MatrixX<Scalar>::Zero(d, d);
  for (Index j = 0; j < d; ++j) p(j, j) = Scalar(2);
  p(i - 2, i - 2) = Scalar(0);
  p(i - 1, i - 1) = Scalar(0);
  p(i - 2, i - 1) = Scalar(2);
  p(i - 1, i - 2) = Scalar(2);
  return p;
}

/// Diagonal 0/1 operator keeping coordinates lo..hi (1-based, inclusive) of a
/// dim-vector and zeroing the rest.
class Selector {
 public:
  Selector(Index dim, Index lo, Index hi) : dim_(dim), lo_(lo), hi_(hi) {
    if (lo < 1 || lo > hi || hi > dim) {
      throw IndexError("Selector: need 1 <= lo <= hi <= dim, got lo=" + std::to_string(lo) +
                       " hi=" + std::to_string(hi) + " dim=" + std::to_string(dim));
    }
  }

  /// Coordinates 1..hi.
  static Selector head(Index dim, Index hi) { return Selector(dim, 1, hi); }
  /// Coordinates lo..dim.
  static Selector tail(Index dim, Index lo) { return Selector(dim, lo, dim); }

  Index dim() const { return dim_; }
  Index lo() const { return lo_; }
  Index hi() const { return hi_; }

  template <typename Scalar = double>
  MatrixX<Scalar> matrix() const {
    MatrixX<Scalar> m = MatrixX<Scalar>::Zero(dim_, dim_);
    for (Index j = lo_ - 1; j < hi_; ++j) m(j, j) = Scalar(1);
    return m;
  }

 private:
  Index dim_;
  Index lo_;
  Index hi_;
};

template <typename Derived>
MatrixX<typename Derived::Scalar> selector_apply(const Selector& s,
                                                 const Eigen::MatrixBase<Derived>& m) {
  if (s.dim() != m.rows()) {
    throw ShapeError("selector_apply: selector dim " + std::to_string(s.dim()) +
                     " vs matrix rows " + std::to_string(m.rows()));
  }
  MatrixX<typename Derived::Scalar> out = MatrixX<typename Derived::Scalar>::Zero(m.rows(), m.cols());
  out.middleRows(s.lo() - 1, s.hi() - s.lo() + 1) = m.middleRows(s.lo() - 1, s.hi() - s.lo() + 1);
  return out;
}

/// Result of a normalization. When the input has zero spread (zero variance
/// with eps = 0, or zero norm) the value is the bias and `degenerate` is set.
template <typename Scalar>
struct Normalized {
  MatrixX<Scalar> value;
  bool degenerate = false;
};

/// (z - mean) / sqrt(var + eps) * gain + bias, with the population variance.
template <typename DerivedZ, typename DerivedB>
Normalized<typename DerivedZ::Scalar> layer_norm(const Eigen::MatrixBase<DerivedZ>& z,
                                                 typename DerivedZ::Scalar eps,
                                                 typename DerivedZ::Scalar gain,
                                                 const Eigen::MatrixBase<DerivedB>& bias) {
  using Scalar = typename DerivedZ::Scalar;
  static_assert(DerivedZ::ColsAtCompileTime == 1, "layer_norm takes a vector");
  if (z.size() < 1) throw ShapeError("layer_norm: empty vector");
  if (bias.size() != z.size()) throw ShapeError("layer_norm: bias size mismatch");
  if (eps < Scalar(0)) throw ConfigError("layer_norm: eps must be >= 0");
  const Scalar mean = z.mean();
  const VectorX<Scalar> centered = z.array() - mean;
  const Scalar var = centered.squaredNorm() / Scalar(z.size());
  Normalized<Scalar> out;
  if (var + eps <= Scalar(0)) {
    out.value = bias;
    out.degenerate = true;
    return out;
  }
  out.value = centered / std::sqrt(var + eps) * gain + bias;
  return out;
}

/// Columnwise layer_norm with a shared gain and bias.
template <typename DerivedM, typename DerivedB>
Normalized<typename DerivedM::Scalar> layer_norm_columns(const Eigen::MatrixBase<DerivedM>& m,
                                                         typename DerivedM::Scalar eps,
                                                         typename DerivedM::Scalar gain,
                                                         const Eigen::MatrixBase<DerivedB>& bias) {
  Normalized<typename DerivedM::Scalar> out;
  out.value.resize(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    auto col = layer_norm(VectorX<typename DerivedM::Scalar>(m.col(c)), eps, gain, bias);
    out.value.col(c) = col.value;
    out.degenerate = out.degenerate || col.degenerate;
  }
  return out;
}

/// z / ||z|| * gain + bias.
template <typename DerivedZ, typename DerivedB>
Normalized<typename DerivedZ::Scalar> rms_norm(const Eigen::MatrixBase<DerivedZ>& z,
                                               typename DerivedZ::Scalar gain,
                                               const Eigen::MatrixBase<DerivedB>& bias) {
  using Scalar = typename DerivedZ::Scalar;
  static_assert(DerivedZ::ColsAtCompileTime == 1, "rms_norm takes a vector");
  if (bias.size() != z.size()) throw ShapeError("rms_norm: bias size mismatch");
  Normalized<Scalar> out;
  const Scalar norm = z.norm();
  if (!(norm > Scalar(0))) {
    out.value = bias;
    out.degenerate = true;
    return out;
  }
  out.value = z / norm * gain + bias;
  return out;
}

template <typename DerivedM, typename DerivedB>
Normalized<typename DerivedM::Scalar> rms_norm_columns(const Eigen::MatrixBase<DerivedM>& m,
                                                       typename DerivedM::Scalar gain,
                                                       const Eigen::MatrixBase<DerivedB>& bias) {
  Normalized<typename DerivedM::Scalar> out;
  out.value.resize(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    auto col = rms_norm(VectorX<typename DerivedM::Scalar>(m.col(c)), gain, bias);
    out.value.col(c) = col.value;
    out.degenerate = out.degenerate || col.degenerate;
  }
  return out;
}

/// One-hot columns: entry (j, i) is 1 when labels[i] == j.
template <typename Scalar = double, typename Labels>
MatrixX<Scalar> one_hot(const Labels& labels, Index classes) {
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(classes, static_cast<Index>(labels.size()));
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i) {
    const auto j = static_cast<Index>(labels[static_cast<std::size_t>(i)]);
    if (j < 0 || j >= classes) throw IndexError("one_hot: label out of range");
    out(j, i) = Scalar(1);
  }
  return out;
}

}  // namespace kmt

#endif  // KMT_MATCORE_HPP
