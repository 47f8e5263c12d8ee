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

#include "kmt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "kmt/oracles.hpp"

namespace kmt {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

OracleResult run_oracle(const Variant& v, const Matrix& points, const Matrix& centers0, int T) {
  return std::visit(
      overloaded{
          [&](const SoftKMeans& s) { return soft_kmeans(points, centers0, s.gamma, T); },
          [&](const Spherical&) { return spherical_lloyd(points, centers0, T); },
          [&](const Robust& r) {
            return std::visit(overloaded{
                                  [&](const SoftmaxGamma& a) { return robust_kmeans(points, centers0, a, T); },
                                  [&](const Sparsemax& a) { return robust_kmeans(points, centers0, a, T); },
                                  [](const Linear&) -> OracleResult {
                                    throw ConfigError("compare: no reference algorithm for linear weighting");
                                  },
                              },
                              r.xi);
          },
          [&](const Medoids& m) { return randomized_kmedoids(points, centers0, m.delta, T, m.seed); },
          [&](const auto&) { return lloyd(points, centers0, T); },
      },
      v);
}

}  // namespace

Mixture gen_mixture(Index n, Index d, Index k, std::uint64_t seed, double scale) {
  if (k < 1 || n < k) throw ConfigError("gen_mixture: need n >= k >= 1");
  if (d < 1) throw ConfigError("gen_mixture: need d >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("gen_mixture: scale must be finite and > 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-5.0, 5.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<Index> component(0, k - 1);

  Matrix means(d, k);
  for (Index j = 0; j < k; ++j) {
    for (Index r = 0; r < d; ++r) means(r, j) = box(rng);
  }
  Mixture m;
  m.points.resize(d, n);
  for (Index i = 0; i < n; ++i) {
    const Index j = component(rng);
    for (Index r = 0; r < d; ++r) m.points(r, i) = means(r, j) + noise(rng);
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index(0));
  std::vector<Index> picked;
  std::sample(all.begin(), all.end(), std::back_inserter(picked), k, rng);
  m.points *= scale;
  m.centers0.resize(d, k);
  for (Index j = 0; j < k; ++j) m.centers0.col(j) = m.points.col(picked[static_cast<std::size_t>(j)]);
  return m;
}

std::string to_string(CompareStatus s) {
  switch (s) {
    case CompareStatus::Ok:
      return "ok";
    case CompareStatus::Tie:
      return "tie";
    case CompareStatus::Degenerate:
      return "degenerate";
    case CompareStatus::Error:
      return "error";
  }
  return "unknown";
}

std::string oracle_name(const Variant& v) {
  return std::visit(overloaded{
                        [](const SoftKMeans&) { return std::string("soft_kmeans"); },
                        [](const Spherical&) { return std::string("spherical_lloyd"); },
                        [](const Robust&) { return std::string("robust_kmeans"); },
                        [](const Medoids&) { return std::string("randomized_kmedoids"); },
                        [](const auto&) { return std::string("lloyd"); },
                    },
                    v);
}

RunReport compare(const Matrix& points, const Matrix& centers0, const VariantConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.gap = kNaN;
  rep.match = kNaN;

  const Trajectory traj = run(points, centers0, config);
  const OracleResult ref = run_oracle(config.variant, points, centers0, config.T);
  rep.transformer_objective = traj.objective;
  rep.oracle_objective = ref.objective;

  if (ref.status == OracleStatus::TieDetected) {
    rep.status = CompareStatus::Tie;
    rep.message = ref.message;
  } else if (ref.status == OracleStatus::DegenerateCluster || traj.status == RunStatus::DegenerateCluster) {
    rep.status = CompareStatus::Degenerate;
    rep.message = !traj.message.empty() ? traj.message : ref.message;
  } else {
    const std::size_t layers = traj.assignments.size();
    double agree = 0.0;
    for (std::size_t t = 0; t < layers; ++t) {
      const std::vector<int> mine = hard_assignments(traj.assignments[t]);
      const std::vector<int>& theirs = ref.assignments[t];
      std::size_t same = 0;
      for (std::size_t i = 0; i < mine.size(); ++i) same += mine[i] == theirs[i] ? 1 : 0;
      agree += static_cast<double>(same) / static_cast<double>(mine.size());
    }
    rep.match = agree / static_cast<double>(layers);
    const double a = traj.objective.back();
    const double b = ref.objective.back();
    rep.gap = a == b ? 0.0 : std::log(a) - std::log(b);
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

RunReport compare(const Matrix& points, const Matrix& centers0, VariantConfig config, const GammaMode& mode) {
  config.mode = mode;
  return compare(points, centers0, config);
}

namespace {

using nlohmann::json;

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw SpecParseError(std::string("sweep spec: missing field \"") + key + "\"");
  return j.at(key);
}

template <typename T>
std::vector<T> list_of(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_array()) throw SpecParseError(std::string("sweep spec: \"") + key + "\" must be an array");
  std::vector<T> out;
  for (const json& e : v) {
    if constexpr (std::is_floating_point_v<T>) {
      if (!e.is_number()) throw SpecParseError(std::string("sweep spec: \"") + key + "\" must hold numbers");
      out.push_back(e.get<T>());
    } else {
      if (!e.is_number_integer()) throw SpecParseError(std::string("sweep spec: \"") + key + "\" must hold integers");
      if (e.is_number_unsigned()) {
        out.push_back(static_cast<T>(e.get<std::uint64_t>()));
      } else {
        const auto value = e.get<std::int64_t>();
        if (value < 0 && std::is_unsigned_v<T>) {
          throw ConfigError(std::string("sweep spec: \"") + key + "\" must be non-negative");
        }
        out.push_back(static_cast<T>(value));
      }
    }
  }
  return out;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw SpecParseError(std::string("variant: \"") + key + "\" must be a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return number(j, key);
}

std::uint64_t optional_seed(const json& j) {
  if (!j.contains("seed")) return 0;
  const json& v = j.at("seed");
  if (!v.is_number_unsigned()) throw SpecParseError("variant: \"seed\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string text(const json& j, const char* key, const char* fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) throw SpecParseError(std::string("variant: \"") + key + "\" must be a string");
  return v.get<std::string>();
}

Variant parse_variant(const json& v) {
  if (!v.is_object()) throw SpecParseError("sweep spec: \"variant\" must be an object");
  const std::string kind = text(v, "kind", "lloyd");
  if (kind == "lloyd") return LloydEuclidean{};
  if (kind == "lloyd_dot") return LloydDotProduct{};
  if (kind == "soft") return SoftKMeans{number(v, "gamma")};
  if (kind == "spherical") {
    const std::string norm = text(v, "norm", "rms");
    if (norm != "rms" && norm != "ln") throw SpecParseError("variant: \"norm\" must be \"rms\" or \"ln\"");
    return Spherical{norm == "ln" ? NormKind::Layer : NormKind::Rms};
  }
  if (kind == "trimmed") return Trimmed{number(v, "gamma_nm"), optional_number(v, "delta")};
  if (kind == "robust") {
    const std::string xi = text(v, "xi", "softmax");
    RobustWeighting w;
    if (xi == "softmax") {
      w = SoftmaxGamma{number(v, "xi_gamma")};
    } else if (xi == "sparsemax") {
      w = Sparsemax{number(v, "xi_gamma")};
    } else if (xi == "linear") {
      w = Linear{};
    } else {
      throw SpecParseError("variant: \"xi\" must be softmax, sparsemax or linear");
    }
    return Robust{w, optional_number(v, "delta")};
  }
  if (kind == "medoids") return Medoids{number(v, "delta"), optional_seed(v)};
  throw SpecParseError("variant: unknown kind \"" + kind + "\"");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("sweep spec: " + what);
}

}  // namespace

SweepSpec parse_sweep_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SpecParseError(std::string("sweep spec: ") + e.what());
  }
  if (!root.is_object()) throw SpecParseError("sweep spec: top level must be an object");

  SweepSpec spec;
  const json& gammas = field(root, "gammas");
  if (!gammas.is_array()) throw SpecParseError("sweep spec: \"gammas\" must be an array");
  for (const json& g : gammas) {
    if (g.is_number()) {
      spec.gammas.push_back(g.get<double>());
    } else if (g.is_string() && g.get<std::string>() == "inf") {
      spec.gammas.push_back(std::numeric_limits<double>::infinity());
    } else {
      throw SpecParseError("sweep spec: \"gammas\" entries must be numbers or \"inf\"");
    }
  }
  spec.dims = list_of<Index>(root, "dims");
  spec.ns = list_of<Index>(root, "ns");
  spec.ks = list_of<Index>(root, "ks");
  spec.scales = list_of<double>(root, "scales");
  spec.seeds = list_of<std::uint64_t>(root, "seeds");
  const json& t = field(root, "T");
  if (!t.is_number_integer()) throw SpecParseError("sweep spec: \"T\" must be an integer");
  const auto layers = t.get<std::int64_t>();
  require(layers >= 1 && layers <= 100000, "T must lie in [1, 100000]");
  spec.T = static_cast<int>(layers);
  if (root.contains("variant")) spec.variant = parse_variant(root.at("variant"));
  validate(spec);
  return spec;
}

void validate(const SweepSpec& spec) {
  require(!spec.gammas.empty() && !spec.dims.empty() && !spec.ns.empty() && !spec.ks.empty() &&
              !spec.scales.empty() && !spec.seeds.empty(),
          "all lists must be nonempty");
  require(spec.T >= 1, "T must be >= 1");
  for (double g : spec.gammas) require(g > 0.0, "gammas must be > 0");
  for (Index d : spec.dims) require(d >= 1, "dims must be >= 1");
  for (Index k : spec.ks) require(k >= 1, "ks must be >= 1");
  for (Index n : spec.ns) {
    for (Index k : spec.ks) require(n >= k, "every n must be >= every k");
  }
  for (double s : spec.scales) require(s > 0.0 && std::isfinite(s), "scales must be finite and > 0");
  std::visit(overloaded{
                 [](const SoftKMeans& v) { require(v.gamma > 0.0 && std::isfinite(v.gamma), "soft gamma must be > 0"); },
                 [](const Trimmed& v) {
                   require(v.gamma_nm > 0.0 && std::isfinite(v.gamma_nm), "gamma_nm must be > 0");
                   require(!v.delta || (*v.delta > 0.0 && std::isfinite(*v.delta)), "delta must be > 0");
                 },
                 [](const Robust& v) {
                   require(!v.delta || (*v.delta > 0.0 && std::isfinite(*v.delta)), "delta must be > 0");
                   require(!std::holds_alternative<Linear>(v.xi), "linear weighting has no reference algorithm");
                   std::visit(overloaded{[](const Linear&) {},
                                         [](const auto& a) {
                                           require(a.gamma > 0.0 && std::isfinite(a.gamma), "xi_gamma must be > 0");
                                         }},
                              v.xi);
                 },
                 [](const Medoids& v) { require(v.delta >= 0.0 && std::isfinite(v.delta), "delta must be >= 0"); },
                 [](const Spherical&) { require(false, "spherical variant needs unit-norm data"); },
                 [](const auto&) {},
             },
             spec.variant);
}

std::uint64_t data_seed(std::uint64_t base_seed, Index d, Index n, Index k) {
  std::uint64_t s = detail::splitmix64(base_seed);
  s = detail::splitmix64(s ^ static_cast<std::uint64_t>(d));
  s = detail::splitmix64(s ^ static_cast<std::uint64_t>(n));
  return detail::splitmix64(s ^ static_cast<std::uint64_t>(k));
}

std::vector<SweepRow> sweep(const SweepSpec& spec, int workers) {
  validate(spec);
  std::vector<SweepRow> rows;
  rows.reserve(spec.size());
  for (double g : spec.gammas) {
    for (Index d : spec.dims) {
      for (Index n : spec.ns) {
        for (Index k : spec.ks) {
          for (double s : spec.scales) {
            for (std::uint64_t seed : spec.seeds) rows.push_back({g, d, n, k, s, seed, {}});
          }
        }
      }
    }
  }

  auto evaluate = [&](SweepRow& row) {
    try {
      const Mixture mix = gen_mixture(row.n, row.d, row.k, data_seed(row.seed, row.d, row.n, row.k), row.scale);
      VariantConfig config{spec.variant, spec.T, ExactLimit{}};
      if (std::isfinite(row.gamma)) config.mode = Finite{row.gamma};
      row.report = compare(mix.points, mix.centers0, config);
    } catch (const std::exception& e) {
      row.report = RunReport{};
      row.report.gap = kNaN;
      row.report.match = kNaN;
      row.report.status = CompareStatus::Error;
      row.report.message = e.what();
    }
  };

  const auto count = static_cast<int>(std::min<std::size_t>(rows.size(), std::max(1, workers)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) evaluate(rows[i]);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace kmt
