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

// Synthetic data, transformer-vs-oracle comparison and parameter sweeps.

#ifndef KMT_HARNESS_HPP
#define KMT_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kmt/matcore.hpp"
#include "kmt/transformer.hpp"

namespace kmt {

struct Mixture {
  Matrix points;    // d x n
  Matrix centers0;  // d x k, distinct data columns
};

/// k Gaussian components with means uniform in [-5, 5]^d and unit isotropic
/// noise, all multiplied by `scale`. The draws do not depend on `scale`, so
/// changing it rescales the same sample.
Mixture gen_mixture(Index n, Index d, Index k, std::uint64_t seed, double scale = 1.0);

enum class CompareStatus { Ok, Tie, Degenerate, Error };

std::string to_string(CompareStatus s);

struct RunReport {
  std::vector<double> transformer_objective;
  std::vector<double> oracle_objective;
  double gap = 0.0;    // log(final transformer objective) - log(final oracle objective)
  double match = 0.0;  // assignment agreement averaged over layers and points
  CompareStatus status = CompareStatus::Ok;
  std::string message;
  double wall_ms = 0.0;
};

/// Name of the oracle a variant is compared with.
std::string oracle_name(const Variant& v);

/// Runs the transformer and its reference algorithm from the same inputs.
/// Ties, degenerate clusters and per-run errors are reported in the status;
/// gap and match are then NaN.
RunReport compare(const Matrix& points, const Matrix& centers0, const VariantConfig& config);
RunReport compare(const Matrix& points, const Matrix& centers0, VariantConfig config, const GammaMode& mode);

/// Grid of runs. A gamma of +infinity selects the exact limiting mode.
struct SweepSpec {
  std::vector<double> gammas;
  std::vector<Index> dims;
  std::vector<Index> ns;
  std::vector<Index> ks;
  std::vector<double> scales;
  int T = 10;
  std::vector<std::uint64_t> seeds;
  Variant variant = LloydEuclidean{};

  std::size_t size() const {
    return gammas.size() * dims.size() * ns.size() * ks.size() * scales.size() * seeds.size();
  }
};

/// Malformed JSON or a field of the wrong type.
class SpecParseError : public Error {
 public:
  using Error::Error;
};

/// Parses {"gammas", "dims", "ns", "ks", "scales", "T", "seeds", "variant"}.
/// Gammas may be numbers or "inf". The variant is an object such as
/// {"kind": "soft", "gamma": 2}. Throws SpecParseError on malformed input and
/// ConfigError on out-of-range values.
SweepSpec parse_sweep_spec(const std::string& json_text);

void validate(const SweepSpec& spec);

/// Seed of the generated data for one grid cell. Cells that differ only in
/// gamma or scale share their data (up to the scale factor).
std::uint64_t data_seed(std::uint64_t base_seed, Index d, Index n, Index k);

struct SweepRow {
  double gamma;
  Index d;
  Index n;
  Index k;
  double scale;
  std::uint64_t seed;
  RunReport report;
};

/// One row per grid cell and seed, ordered gamma, d, n, k, scale, seed (last
/// fastest) whatever the number of workers.
std::vector<SweepRow> sweep(const SweepSpec& spec, int workers = 1);

}  // namespace kmt

#endif  // KMT_HARNESS_HPP
