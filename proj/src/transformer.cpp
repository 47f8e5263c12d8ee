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

#include "kmt/transformer.hpp"

#include <cmath>

#include "kmt/oracles.hpp"

namespace kmt {
namespace {

// I_D^{lo:hi}, 1-based.
Matrix sel(Index dim, Index lo, Index hi) { return Selector(dim, lo, hi).matrix(); }
Matrix head(Index dim, Index hi) { return Selector::head(dim, hi).matrix(); }
Matrix tail(Index dim, Index lo) { return Selector::tail(dim, lo).matrix(); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite and > 0");
}

void check_mode(const GammaMode& mode) {
  if (const auto* f = std::get_if<Finite>(&mode)) require_positive(f->gamma, "finite gamma");
}

ActivationKind to_activation(const RobustWeighting& xi) {
  return std::visit([](const auto& w) -> ActivationKind { return w; }, xi);
}

}  // namespace

std::string variant_name(const Variant& v) {
  return std::visit(overloaded{
                        [](const LloydEuclidean&) { return std::string("lloyd"); },
                        [](const LloydDotProduct&) { return std::string("lloyd_dot"); },
                        [](const SoftKMeans&) { return std::string("soft"); },
                        [](const Spherical&) { return std::string("spherical"); },
                        [](const Trimmed&) { return std::string("trimmed"); },
                        [](const Robust&) { return std::string("robust"); },
                        [](const Medoids&) { return std::string("medoids"); },
                    },
                    v);
}

Layout layout_for(const Variant& v, Index dim, Index clusters) {
  Layout l;
  l.dim = dim;
  l.clusters = clusters;
  l.lifted = std::holds_alternative<LloydDotProduct>(v) || std::holds_alternative<Robust>(v);
  l.aux = std::holds_alternative<Robust>(v);
  return l;
}

TransformerState embed(const Matrix& points, const Matrix& centers0, const Variant& variant) {
  const Index d = points.rows();
  const Index n = points.cols();
  const Index k = centers0.cols();
  if (d < 1 || n < 1) throw ConfigError("embed: need at least one point with d >= 1");
  if (centers0.rows() != d) throw ShapeError("embed: centers and points differ in dimension");
  if (k < 1) throw ConfigError("embed: need at least one center");
  if (k > n) {
    throw ConfigError("embed: k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  }
  if (!points.allFinite() || !centers0.allFinite()) throw ConfigError("embed: non-finite input");

  if (const auto* sp = std::get_if<Spherical>(&variant)) {
    for (Index i = 0; i < n; ++i) {
      if (std::abs(points.col(i).norm() - 1.0) > 1e-9) {
        throw ConfigError("embed: spherical input column " + std::to_string(i) + " is not unit norm");
      }
      if (sp->norm == NormKind::Layer && std::abs(points.col(i).sum()) > 1e-9) {
        throw ConfigError("embed: LayerNorm mode needs zero-sum columns, column " + std::to_string(i) +
                          " is not");
      }
    }
  }

  const Layout l = layout_for(variant, d, k);
  TransformerState s;
  s.encoder.layout = l;
  s.decoder.layout = l;
  s.encoder.tokens = Matrix::Zero(l.rows(), n);
  s.decoder.tokens = Matrix::Zero(l.rows(), k);
  if (l.lifted) {
    s.encoder.tokens.topRows(l.point_rows()) = lift(points);
    s.decoder.tokens.topRows(l.point_rows()) = lift(centers0);
  } else {
    s.encoder.tokens.topRows(d) = points;
    s.decoder.tokens.topRows(d) = centers0;
  }
  s.decoder.tokens.middleRows(l.point_rows(), k).setIdentity();
  if (l.aux) s.decoder.tokens.bottomRows(k).setIdentity();
  return s;
}

double default_delta(const Matrix& points) {
  double widest = 0.0;
  for (Index i = 0; i < points.cols(); ++i) {
    for (Index j = i + 1; j < points.cols(); ++j) {
      widest = std::max(widest, (points.col(i) - points.col(j)).squaredNorm());
    }
  }
  // Coincident points leave nothing to separate; any positive gap works.
  return widest > 0.0 ? 10.0 * widest : 1.0;
}

ActivationKind selective(const GammaMode& mode) {
  if (const auto* f = std::get_if<Finite>(&mode)) return SoftmaxGamma{f->gamma};
  return Limiting{};
}

LayerParameters lloyd_parameters(Index dim, Index clusters, const GammaMode& mode) {
  const Index D = dim + clusters;
  const ActivationKind act = selective(mode);
  LayerParameters p;
  p.enc_cross = {head(D, dim), head(D, dim), tail(D, dim + 1), Score::NegSqEuclidean, act};
  p.enc_self = {head(D, dim), head(D, dim), -tail(D, dim + 1), Score::NegSqEuclidean, Limiting{}};
  p.dec_cross = {tail(D, dim + 1), tail(D, dim + 1), head(D, dim), Score::DotProduct, act};
  p.dec_self = {tail(D, dim + 1), tail(D, dim + 1), -head(D, dim), Score::DotProduct, Limiting{}};
  return p;
}

LayerParameters soft_parameters(Index dim, Index clusters, double gamma, const GammaMode& mode) {
  LayerParameters p = lloyd_parameters(dim, clusters, mode);
  p.enc_cross.activation = SoftmaxGamma{gamma};
  p.dec_cross.activation = Linear{};
  return p;
}

LayerParameters dot_product_parameters(Index dim, Index clusters, const GammaMode& mode) {
  const Index lifted = dim + 2;
  const Index D = lifted + clusters;
  const ActivationKind act = selective(mode);
  const Matrix perm = perm_op(lifted, D);
  LayerParameters p;
  p.enc_cross = {perm, head(D, lifted), tail(D, lifted + 1), Score::DotProduct, act};
  p.enc_self = {perm, head(D, lifted), -tail(D, lifted + 1), Score::DotProduct, Limiting{}};
  p.dec_cross = {tail(D, lifted + 1), tail(D, lifted + 1), head(D, dim), Score::DotProduct, act};
  p.dec_self = {tail(D, lifted + 1), tail(D, lifted + 1), -head(D, lifted), Score::DotProduct, Limiting{}};
  return p;
}

LayerParameters spherical_parameters(Index dim, Index clusters, const GammaMode& mode) {
  const Index D = dim + clusters;
  const ActivationKind act = selective(mode);
  LayerParameters p;
  p.enc_cross = {head(D, dim), head(D, dim), tail(D, dim + 1), Score::DotProduct, act};
  p.enc_self = {head(D, dim), head(D, dim), -tail(D, dim + 1), Score::DotProduct, Limiting{}};
  p.dec_cross = {tail(D, dim + 1), tail(D, dim + 1), head(D, dim), Score::DotProduct, act};
  p.dec_self = {tail(D, dim + 1), tail(D, dim + 1), -head(D, dim), Score::DotProduct, Limiting{}};
  return p;
}

LayerParameters gapped_parameters(Index dim, Index clusters, double delta, ActivationKind center_activation,
                                  const GammaMode& mode) {
  const Index D = dim + clusters;
  LayerParameters p = lloyd_parameters(dim, clusters, mode);
  const Matrix gap = head(D, dim) + std::sqrt(delta) * tail(D, dim + 1);
  p.dec_cross = {gap, gap, head(D, dim), Score::NegSqEuclidean, std::move(center_activation)};
  return p;
}

TransformerState apply_layer(const TransformerState& s, const LayerParameters& p, LayerTrace* trace) {
  const Matrix& x = s.encoder.tokens;
  const Matrix& c = s.decoder.tokens;

  Matrix enc_self = attend(x, x, p.enc_self);
  Matrix enc_cross = attend(x, c, p.enc_cross);
  Matrix enc_mid = x + enc_self;
  TransformerState out = s;
  out.encoder.tokens = enc_mid + enc_cross;

  Matrix dec_self = attend(c, c, p.dec_self);
  Matrix dec_cross = attend(c, out.encoder.tokens, p.dec_cross);
  Matrix dec_mid = c + dec_self;
  out.decoder.tokens = dec_mid + dec_cross;

  if (trace != nullptr) {
    trace->enc_cross = std::move(enc_cross);
    trace->enc_self = std::move(enc_self);
    trace->enc_residual_plus_self = std::move(enc_mid);
    trace->aux_update.resize(0, 0);
    trace->dec_cross = std::move(dec_cross);
    trace->dec_self = std::move(dec_self);
    trace->dec_residual_plus_self = std::move(dec_mid);
  }
  return out;
}

Matrix QuadFfn::operator()(const Matrix& tokens) const {
  const Matrix hidden = (input_weights * tokens).array().square().matrix();
  Matrix out = output_weights * hidden;
  out.colwise() += bias;
  return out;
}

QuadFfn QuadFfn::squared_norm_refresh(Index dim, Index rows) {
  if (rows < dim + 2) throw ShapeError("squared_norm_refresh: token too short for lifted rows");
  QuadFfn f;
  f.input_weights = Matrix::Zero(dim, rows);
  f.input_weights.leftCols(dim).setIdentity();
  f.output_weights = Matrix::Zero(rows, dim);
  f.output_weights.row(dim).setOnes();
  f.bias = Vector::Zero(rows);
  f.bias[dim + 1] = -0.5;
  return f;
}

DecoderState quad_ffn(const DecoderState& mid) {
  if (!mid.layout.lifted) throw ConfigError("quad_ffn: decoder layout is not lifted");
  DecoderState out = mid;
  out.tokens += QuadFfn::squared_norm_refresh(mid.layout.dim, mid.layout.rows())(mid.tokens);
  return out;
}

TransformerState layer_lloyd(const TransformerState& s, const GammaMode& mode, LayerTrace* trace) {
  return apply_layer(s, lloyd_parameters(s.encoder.layout.dim, s.encoder.layout.clusters, mode), trace);
}

TransformerState layer_soft(const TransformerState& s, double gamma, const GammaMode& mode, LayerTrace* trace) {
  require_positive(gamma, "soft k-means gamma");
  return apply_layer(s, soft_parameters(s.encoder.layout.dim, s.encoder.layout.clusters, gamma, mode), trace);
}

TransformerState layer_dotproduct(const TransformerState& s, const GammaMode& mode, LayerTrace* trace) {
  if (!s.encoder.layout.lifted) throw ConfigError("layer_dotproduct: state is not lifted");
  TransformerState out =
      apply_layer(s, dot_product_parameters(s.encoder.layout.dim, s.encoder.layout.clusters, mode), trace);
  out.decoder = quad_ffn(out.decoder);
  return out;
}

TransformerState layer_spherical(const TransformerState& s, NormKind norm, const GammaMode& mode,
                                 LayerTrace* trace) {
  const Index d = s.encoder.layout.dim;
  TransformerState out = apply_layer(s, spherical_parameters(d, s.encoder.layout.clusters, mode), trace);
  const Matrix sums = out.decoder.centers();
  const Vector zero = Vector::Zero(d);
  const Normalized<double> normalized = norm == NormKind::Layer
                                            ? layer_norm_columns(sums, 0.0, 1.0 / std::sqrt(double(d)), zero)
                                            : rms_norm_columns(sums, 1.0, zero);
  if (normalized.degenerate) throw DegenerateInputError("layer_spherical: a cluster direction sums to zero");
  out.decoder.tokens.topRows(d) = normalized.value;
  return out;
}

TransformerState layer_trimmed(const TransformerState& s, double gamma_nm, double delta, const GammaMode& mode,
                               LayerTrace* trace) {
  require_positive(gamma_nm, "trimmed gamma_nm");
  require_positive(delta, "trimmed delta");
  return apply_layer(
      s, gapped_parameters(s.encoder.layout.dim, s.encoder.layout.clusters, delta, NormmaxInf{gamma_nm}, mode),
      trace);
}

TransformerState layer_medoids(const TransformerState& s, double delta, std::uint64_t seed, std::uint64_t layer,
                               const GammaMode& mode, LayerTrace* trace) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("medoids delta must be finite and >= 0");
  return apply_layer(s,
                     gapped_parameters(s.encoder.layout.dim, s.encoder.layout.clusters, delta,
                                       GumbelMax{seed, layer}, mode),
                     trace);
}

TransformerState layer_robust(const TransformerState& s, const RobustWeighting& xi, double delta,
                              const GammaMode& mode, LayerTrace* trace) {
  const Layout& l = s.encoder.layout;
  if (!l.lifted || !l.aux) throw ConfigError("layer_robust: state lacks the lifted or auxiliary block");
  require_positive(delta, "robust delta");
  std::visit(overloaded{[](const SoftmaxGamma& w) { require_positive(w.gamma, "robust softmax gamma"); },
                        [](const Sparsemax& w) { require_positive(w.gamma, "robust sparsemax gamma"); },
                        [](const Linear&) {}},
             xi);

  const Index d = l.dim;
  const Index k = l.clusters;
  const Index lifted = d + 2;
  const Index D = lifted + 2 * k;
  const ActivationKind act = selective(mode);
  const Matrix perm = perm_op(lifted, D);
  const Matrix& x = s.encoder.tokens;
  const Matrix& c = s.decoder.tokens;

  // Stage 1: new one-hot assignments; Y and Y^ are cleared.
  const AttentionHead enc_cross{perm, head(D, lifted), sel(D, lifted + 1, lifted + k), Score::DotProduct, act};
  const AttentionHead enc_self{perm, head(D, lifted), -tail(D, lifted + 1), Score::DotProduct, Limiting{}};
  Matrix enc_self_out = attend(x, x, enc_self);
  Matrix enc_cross_out = attend(x, c, enc_cross);
  Matrix enc_mid = x + enc_self_out;
  const Matrix x_half = enc_mid + enc_cross_out;

  // Stage 2: Y^ = DP(C, X) + delta * Y through identity-activation attention.
  Matrix gap_key = Matrix::Zero(D, D);
  gap_key.topLeftCorner(lifted, lifted) = perm_op(lifted, lifted);
  gap_key.bottomRightCorner(2 * k, 2 * k) = delta * Matrix::Identity(2 * k, 2 * k);
  const AttentionHead aux{head(D, lifted + k), gap_key, tail(D, lifted + k + 1), Score::DotProduct, Identity{}};
  Matrix aux_out = attend(x_half, c, aux);

  TransformerState out = s;
  out.encoder.tokens = x_half + aux_out;

  // Stage 3: centers from the weighted columns of Y^^T, then the lifted rows.
  const AttentionHead dec_cross{tail(D, lifted + k + 1), tail(D, lifted + k + 1), head(D, d), Score::DotProduct,
                                to_activation(xi)};
  const AttentionHead dec_self{tail(D, lifted + k + 1), tail(D, lifted + k + 1), -head(D, lifted),
                               Score::DotProduct, Limiting{}};
  Matrix dec_self_out = attend(c, c, dec_self);
  Matrix dec_cross_out = attend(c, out.encoder.tokens, dec_cross);
  Matrix dec_mid = c + dec_self_out;
  out.decoder.tokens = dec_mid + dec_cross_out;
  out.decoder = quad_ffn(out.decoder);

  if (trace != nullptr) {
    trace->enc_cross = std::move(enc_cross_out);
    trace->enc_self = std::move(enc_self_out);
    trace->enc_residual_plus_self = std::move(enc_mid);
    trace->aux_update = std::move(aux_out);
    trace->dec_cross = std::move(dec_cross_out);
    trace->dec_self = std::move(dec_self_out);
    trace->dec_residual_plus_self = std::move(dec_mid);
  }
  return out;
}

TransformerState step(const TransformerState& s, const VariantConfig& config, double delta, std::uint64_t layer,
                      LayerTrace* trace) {
  const GammaMode& mode = config.mode;
  return std::visit(
      overloaded{
          [&](const LloydEuclidean&) { return layer_lloyd(s, mode, trace); },
          [&](const LloydDotProduct&) { return layer_dotproduct(s, mode, trace); },
          [&](const SoftKMeans& v) { return layer_soft(s, v.gamma, mode, trace); },
          [&](const Spherical& v) { return layer_spherical(s, v.norm, mode, trace); },
          [&](const Trimmed& v) { return layer_trimmed(s, v.gamma_nm, delta, mode, trace); },
          [&](const Robust& v) { return layer_robust(s, v.xi, delta, mode, trace); },
          [&](const Medoids& v) { return layer_medoids(s, v.delta, v.seed, layer, mode, trace); },
      },
      config.variant);
}

Trajectory run(const Matrix& points, const Matrix& centers0, const VariantConfig& config) {
  if (config.T < 1) throw ConfigError("run: T must be >= 1");
  check_mode(config.mode);

  Trajectory traj;
  traj.delta = std::visit(overloaded{
                              [&](const Trimmed& v) { return v.delta.value_or(default_delta(points)); },
                              [&](const Robust& v) { return v.delta.value_or(default_delta(points)); },
                              [](const Medoids& v) { return v.delta; },
                              [](const auto&) { return 0.0; },
                          },
                          config.variant);

  TransformerState state = embed(points, centers0, config.variant);
  for (int t = 0; t < config.T; ++t) {
    try {
      state = step(state, config, traj.delta, static_cast<std::uint64_t>(t));
    } catch (const DegenerateInputError& e) {
      traj.status = RunStatus::DegenerateCluster;
      traj.message = e.what();
      break;
    }
    traj.assignments.emplace_back(state.encoder.assign());
    traj.centers.emplace_back(state.decoder.centers());
    traj.objective.push_back(kmeans_objective(points, traj.centers.back()));
  }
  traj.final_state = std::move(state);
  return traj;
}

std::vector<int> hard_assignments(const Matrix& assign) {
  std::vector<int> out(static_cast<std::size_t>(assign.cols()));
  for (Index i = 0; i < assign.cols(); ++i) {
    Index best = 0;
    assign.col(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

bool is_one_hot(const Matrix& assign) {
  for (Index i = 0; i < assign.cols(); ++i) {
    int ones = 0;
    for (Index j = 0; j < assign.rows(); ++j) {
      const double v = assign(j, i);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

}  // namespace kmt
