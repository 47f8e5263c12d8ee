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

// The k-means transformer.
//
// An encoder holds one token per point, [x_i; y_i], where y_i is the current
// cluster assignment. A decoder holds one token per cluster, [c_j; e_j]. Each
// layer is
//
//   X' = X + attn(X, C~; enc_cross) + attn(X, X; enc_self)
//   C' = C~ + attn(C~, X'; dec_cross) + attn(C~, C~; dec_self)
//
// with hand-set Q/K/V so that the self-attention terms cancel the previous
// assignment (center) block and the cross-attention terms write the new one.
// Variants change the score function, the activation, and add a
// normalization or a quadratic feed-forward step on the decoder.

#ifndef KMT_TRANSFORMER_HPP
#define KMT_TRANSFORMER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kmt/activations.hpp"
#include "kmt/attention.hpp"
#include "kmt/matcore.hpp"

namespace kmt {

enum class NormKind { Layer, Rms };

struct LloydEuclidean {};
struct LloydDotProduct {};
struct SoftKMeans {
  double gamma;
};
struct Spherical {
  NormKind norm = NormKind::Rms;
};
/// Norm-max center update. gamma_nm sets the inlier threshold; delta separates
/// cluster members from non-members (defaults to default_delta(points)).
struct Trimmed {
  double gamma_nm;
  std::optional<double> delta;
};
/// Within-cluster weighting applied to distance scores in the robust variant.
using RobustWeighting = std::variant<SoftmaxGamma, Sparsemax, Linear>;
struct Robust {
  RobustWeighting xi;
  std::optional<double> delta;
};
struct Medoids {
  double delta;
  std::uint64_t seed = 0;
};

using Variant = std::variant<LloydEuclidean, LloydDotProduct, SoftKMeans, Spherical, Trimmed, Robust, Medoids>;

/// How the two cross-attention sites (assignment and center update) are
/// evaluated: as the exact limiting softmax, or as a softmax with a finite
/// inverse temperature. The self-attention sites always cancel exactly.
struct ExactLimit {};
struct Finite {
  double gamma;
};
using GammaMode = std::variant<ExactLimit, Finite>;

struct VariantConfig {
  Variant variant = LloydEuclidean{};
  int T = 10;
  GammaMode mode = ExactLimit{};
};

std::string variant_name(const Variant& v);

/// Token layout shared by the encoder and decoder.
struct Layout {
  Index dim = 0;       // d
  Index clusters = 0;  // k
  bool lifted = false;  // point block is lift(x), d + 2 rows
  bool aux = false;     // extra k-row block (robust variant)

  Index point_rows() const { return lifted ? dim + 2 : dim; }
  Index rows() const { return point_rows() + clusters + (aux ? clusters : 0); }
};

Layout layout_for(const Variant& v, Index dim, Index clusters);

/// Encoder tokens [X or lift(X); Y; (Y^)].
struct EncoderState {
  Layout layout;
  Matrix tokens;

  auto points() const { return tokens.topRows(layout.dim); }
  auto point_block() const { return tokens.topRows(layout.point_rows()); }
  auto assign() const { return tokens.middleRows(layout.point_rows(), layout.clusters); }
  auto aux() const { return tokens.bottomRows(layout.clusters); }
};

/// Decoder tokens [C or lift(C); I_k; (I_k)].
struct DecoderState {
  Layout layout;
  Matrix tokens;

  auto centers() const { return tokens.topRows(layout.dim); }
  auto point_block() const { return tokens.topRows(layout.point_rows()); }
  /// Squared-norm row and the constant -1/2 row (lifted layouts only).
  auto lifted_rows() const { return tokens.middleRows(layout.dim, 2); }
  auto code() const { return tokens.middleRows(layout.point_rows(), layout.clusters); }
  auto aux_code() const { return tokens.bottomRows(layout.clusters); }
};

struct TransformerState {
  EncoderState encoder;
  DecoderState decoder;
};

/// Builds the initial tokens. Assignments start at zero, the decoder code
/// block at I_k. Throws ConfigError when k > n, shapes disagree, or a
/// spherical input is off the unit sphere (LN mode also needs zero-sum
/// columns).
TransformerState embed(const Matrix& points, const Matrix& centers0, const Variant& variant);

/// 10 x the largest pairwise squared distance (1 when all points coincide).
double default_delta(const Matrix& points);

/// The four attention heads of one layer.
struct LayerParameters {
  AttentionHead enc_cross;
  AttentionHead enc_self;
  AttentionHead dec_cross;
  AttentionHead dec_self;
};

/// Intermediate terms of the last layer evaluated, for inspection.
struct LayerTrace {
  Matrix enc_cross;
  Matrix enc_self;
  Matrix enc_residual_plus_self;
  Matrix aux_update;
  Matrix dec_cross;
  Matrix dec_self;
  Matrix dec_residual_plus_self;
};

/// Activation of the cross-attention sites under `mode`.
ActivationKind selective(const GammaMode& mode);

LayerParameters lloyd_parameters(Index dim, Index clusters, const GammaMode& mode = ExactLimit{});
LayerParameters soft_parameters(Index dim, Index clusters, double gamma, const GammaMode& mode = ExactLimit{});
LayerParameters dot_product_parameters(Index dim, Index clusters, const GammaMode& mode = ExactLimit{});
LayerParameters spherical_parameters(Index dim, Index clusters, const GammaMode& mode = ExactLimit{});
/// Lloyd heads with the decoder cross-attention replaced by negative squared
/// distances under Q = K = I^{:d} + sqrt(delta) I^{d+1:}, which scores
/// non-members of cluster j at -||x - c_j||^2 - 2 delta.
LayerParameters gapped_parameters(Index dim, Index clusters, double delta, ActivationKind center_activation,
                                  const GammaMode& mode = ExactLimit{});

/// One residual + cross-attention + self-attention layer with explicit heads.
TransformerState apply_layer(const TransformerState& s, const LayerParameters& p, LayerTrace* trace = nullptr);

/// Feed-forward network W_out * square(W_in * c) + bias, applied columnwise.
struct QuadFfn {
  Matrix input_weights;
  Matrix output_weights;
  Vector bias;

  Matrix operator()(const Matrix& tokens) const;

  /// Writes ||c||^2 into row d + 1 and -1/2 into row d + 2 of tokens with
  /// `rows` coordinates whose first d entries hold a center.
  static QuadFfn squared_norm_refresh(Index dim, Index rows);
};

/// Residual quadratic FFN: rebuilds [lift(C); codes] from tokens whose lifted
/// rows have been zeroed.
DecoderState quad_ffn(const DecoderState& mid);

TransformerState layer_lloyd(const TransformerState& s, const GammaMode& mode = ExactLimit{},
                             LayerTrace* trace = nullptr);
TransformerState layer_soft(const TransformerState& s, double gamma, const GammaMode& mode = ExactLimit{},
                            LayerTrace* trace = nullptr);
TransformerState layer_dotproduct(const TransformerState& s, const GammaMode& mode = ExactLimit{},
                                  LayerTrace* trace = nullptr);
/// Throws DegenerateInputError when a cluster direction sums to zero.
TransformerState layer_spherical(const TransformerState& s, NormKind norm, const GammaMode& mode = ExactLimit{},
                                 LayerTrace* trace = nullptr);
TransformerState layer_trimmed(const TransformerState& s, double gamma_nm, double delta,
                               const GammaMode& mode = ExactLimit{}, LayerTrace* trace = nullptr);
TransformerState layer_robust(const TransformerState& s, const RobustWeighting& xi, double delta,
                              const GammaMode& mode = ExactLimit{}, LayerTrace* trace = nullptr);
/// Medoid sampling for layer `layer` draws cluster j from the stream
/// (seed, layer, j).
TransformerState layer_medoids(const TransformerState& s, double delta, std::uint64_t seed, std::uint64_t layer,
                               const GammaMode& mode = ExactLimit{}, LayerTrace* trace = nullptr);

enum class RunStatus { Ok, DegenerateCluster };

/// Per-layer record of a transformer run; entry t holds the output of layer t + 1.
struct Trajectory {
  std::vector<Matrix> assignments;  // k x n
  std::vector<Matrix> centers;      // d x k
  std::vector<double> objective;    // k-means objective of the centers
  RunStatus status = RunStatus::Ok;
  std::string message;
  TransformerState final_state;
  double delta = 0.0;  // resolved delta for gapped variants, 0 otherwise
};

/// One layer of the configured variant. `delta` is the resolved gap for
/// Trimmed/Robust, `layer` the zero-based layer index for Medoids.
TransformerState step(const TransformerState& s, const VariantConfig& config, double delta, std::uint64_t layer,
                      LayerTrace* trace = nullptr);

/// Runs config.T layers. A degenerate cluster stops the run early and is
/// reported in the status; configuration errors throw.
Trajectory run(const Matrix& points, const Matrix& centers0, const VariantConfig& config);

/// Index of the largest entry of each assignment column.
std::vector<int> hard_assignments(const Matrix& assign);

/// True when every column is an exact one-hot vector.
bool is_one_hot(const Matrix& assign);

}  // namespace kmt

#endif  // KMT_TRANSFORMER_HPP
