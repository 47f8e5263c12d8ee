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

#include "kmt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmt/harness.hpp"
#include "kmt/oracles.hpp"
#include "kmt/transformer.hpp"

namespace kmt {
namespace {

// An output file could not be created or written.
class OutputError : public Error {
 public:
  using Error::Error;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_number(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw OutputError("cannot write " + path);
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Cluster/compare flags shared by both subcommands.
struct RunOptions {
  std::string input;
  std::string output;
  std::string centers_path;
  std::string variant = "lloyd";
  std::string gamma_mode = "exact";
  std::string norm = "rms";
  std::string xi = "softmax";
  std::string engine = "transformer";
  long long k = 0;
  long long T = 10;
  double gamma = 0.0;
  double delta = 0.0;
  double gamma_nm = 0.0;
  double tau = 0.0;
  double scale = 1.0;
  std::uint64_t seed = 0;

  CLI::Option* k_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* delta_opt = nullptr;
  CLI::Option* gamma_nm_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--input,-i", o.input, "CSV of points, one per row")->required();
  cmd->add_option("--centers", o.centers_path, "CSV of initial centers, one per row (default: k sampled points)");
  o.k_opt = cmd->add_option("--k,-k", o.k, "Number of clusters");
  cmd->add_option("--T,-T", o.T, "Number of layers / iterations")->capture_default_str();
  cmd->add_option("--variant", o.variant, "Algorithm variant")
      ->check(CLI::IsMember({"lloyd", "lloyd_dot", "soft", "spherical", "trimmed", "robust", "medoids"}))
      ->capture_default_str();
  cmd->add_option("--gamma-mode", o.gamma_mode,
                  "'exact' for limiting softmax, or a number for a finite inverse temperature")
      ->capture_default_str();
  o.gamma_opt = cmd->add_option("--gamma", o.gamma, "Inverse temperature of the soft or robust weighting");
  o.delta_opt = cmd->add_option("--delta", o.delta, "Cluster-membership gap (trimmed, robust, medoids)");
  o.gamma_nm_opt = cmd->add_option("--gamma-nm", o.gamma_nm, "Norm-max parameter (trimmed transformer)");
  o.tau_opt = cmd->add_option("--tau", o.tau, "Inlier percentile in [0, 100) (trimmed reference algorithm)");
  cmd->add_option("--scale", o.scale, "Multiply the input points by this factor")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for initial centers and medoid sampling")->capture_default_str();
  cmd->add_option("--norm", o.norm, "Spherical normalization")
      ->check(CLI::IsMember({"rms", "ln"}))
      ->capture_default_str();
  cmd->add_option("--xi", o.xi, "Robust within-cluster weighting")
      ->check(CLI::IsMember({"softmax", "sparsemax", "linear"}))
      ->capture_default_str();
}

GammaMode parse_mode(const std::string& text) {
  if (text == "exact") return ExactLimit{};
  double g = 0.0;
  if (!parse_number(text, g)) throw CsvParseError("--gamma-mode: expected 'exact' or a number, got '" + text + "'");
  if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("--gamma-mode: finite gamma must be > 0");
  return Finite{g};
}

double required(const CLI::Option* opt, double value, const char* what) {
  if (opt->count() == 0) throw ConfigError(std::string(what) + " is required for this variant");
  return value;
}

std::optional<double> optional(const CLI::Option* opt, double value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

VariantConfig build_config(const RunOptions& o, const Matrix& points) {
  if (o.T < 1 || o.T > 100000) throw ConfigError("--T must lie in [1, 100000]");
  VariantConfig config;
  config.T = static_cast<int>(o.T);
  config.mode = parse_mode(o.gamma_mode);
  const std::string& v = o.variant;
  if (v == "lloyd") {
    config.variant = LloydEuclidean{};
  } else if (v == "lloyd_dot") {
    config.variant = LloydDotProduct{};
  } else if (v == "soft") {
    config.variant = SoftKMeans{required(o.gamma_opt, o.gamma, "--gamma")};
  } else if (v == "spherical") {
    config.variant = Spherical{o.norm == "ln" ? NormKind::Layer : NormKind::Rms};
  } else if (v == "trimmed") {
    config.variant = Trimmed{required(o.gamma_nm_opt, o.gamma_nm, "--gamma-nm"), optional(o.delta_opt, o.delta)};
  } else if (v == "robust") {
    RobustWeighting xi = Linear{};
    if (o.xi == "softmax") xi = SoftmaxGamma{required(o.gamma_opt, o.gamma, "--gamma")};
    if (o.xi == "sparsemax") xi = Sparsemax{required(o.gamma_opt, o.gamma, "--gamma")};
    config.variant = Robust{xi, optional(o.delta_opt, o.delta)};
  } else {
    config.variant = Medoids{o.delta_opt->count() > 0 ? o.delta : default_delta(points), o.seed};
  }

  // Range checks, so that no computation starts on invalid parameters.
  auto positive = [](double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " must be finite and > 0");
  };
  if (o.gamma_opt->count() > 0) positive(o.gamma, "--gamma");
  if (o.gamma_nm_opt->count() > 0) positive(o.gamma_nm, "--gamma-nm");
  if (o.delta_opt->count() > 0) {
    if (v == "medoids") {
      if (!(o.delta >= 0.0) || !std::isfinite(o.delta)) throw ConfigError("--delta must be finite and >= 0");
    } else {
      positive(o.delta, "--delta");
    }
  }
  return config;
}

struct Inputs {
  Matrix points;
  Matrix centers0;
};

Inputs load_inputs(const RunOptions& o) {
  Inputs in;
  in.points = read_points_csv(o.input);
  if (!(o.scale > 0.0) || !std::isfinite(o.scale)) throw ConfigError("--scale must be finite and > 0");
  in.points *= o.scale;
  const Index n = in.points.cols();
  if (!o.centers_path.empty()) {
    in.centers0 = read_points_csv(o.centers_path) * o.scale;
    if (in.centers0.rows() != in.points.rows()) {
      throw ShapeError("centers have " + std::to_string(in.centers0.rows()) + " coordinates, points have " +
                       std::to_string(in.points.rows()));
    }
    if (o.k_opt->count() > 0 && o.k != in.centers0.cols()) throw ConfigError("--k disagrees with the centers file");
    if (in.centers0.cols() > n) throw ConfigError("k = " + std::to_string(in.centers0.cols()) + " exceeds n");
    return in;
  }
  if (o.k_opt->count() == 0) throw ConfigError("--k or --centers is required");
  if (o.k < 1) throw ConfigError("--k must be >= 1");
  if (o.k > n) throw ConfigError("k = " + std::to_string(o.k) + " exceeds n = " + std::to_string(n));
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index(0));
  std::vector<Index> picked;
  std::mt19937_64 rng(o.seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), o.k, rng);
  in.centers0.resize(in.points.rows(), static_cast<Index>(o.k));
  for (Index j = 0; j < in.centers0.cols(); ++j) in.centers0.col(j) = in.points.col(picked[static_cast<std::size_t>(j)]);
  return in;
}

std::vector<int> nearest_labels(const Matrix& points, const Matrix& centers) {
  return hard_assignments(dp(centers, points));
}

OracleResult run_reference(const RunOptions& o, const VariantConfig& config, const Inputs& in) {
  const int T = config.T;
  if (o.variant == "soft") return soft_kmeans(in.points, in.centers0, std::get<SoftKMeans>(config.variant).gamma, T);
  if (o.variant == "spherical") return spherical_lloyd(in.points, in.centers0, T);
  if (o.variant == "trimmed") {
    if (o.tau_opt->count() == 0) throw ConfigError("--tau is required for the trimmed reference algorithm");
    return trimmed_kmeans(in.points, in.centers0, o.tau, T);
  }
  if (o.variant == "robust") {
    const auto& xi = std::get<Robust>(config.variant).xi;
    if (const auto* s = std::get_if<SoftmaxGamma>(&xi)) return robust_kmeans(in.points, in.centers0, *s, T);
    if (const auto* s = std::get_if<Sparsemax>(&xi)) return robust_kmeans(in.points, in.centers0, *s, T);
    throw ConfigError("the robust reference algorithm supports softmax and sparsemax weighting only");
  }
  if (o.variant == "medoids") {
    return randomized_kmedoids(in.points, in.centers0, std::get<Medoids>(config.variant).delta, T, o.seed);
  }
  return lloyd(in.points, in.centers0, T);
}

int cmd_cluster(const RunOptions& o) {
  const Inputs in = load_inputs(o);
  const VariantConfig config = build_config(o, in.points);

  std::vector<int> labels;
  Matrix centers;
  std::string status;
  if (o.engine == "oracle") {
    const OracleResult r = run_reference(o, config, in);
    centers = r.centers.empty() ? in.centers0 : r.centers.back();
    labels = r.assignments.empty() ? nearest_labels(in.points, in.centers0) : r.assignments.back();
    status = to_string(r.status);
  } else {
    const Trajectory t = run(in.points, in.centers0, config);
    centers = t.centers.empty() ? in.centers0 : t.centers.back();
    labels = t.assignments.empty() ? nearest_labels(in.points, in.centers0) : hard_assignments(t.assignments.back());
    status = t.status == RunStatus::Ok ? "ok" : "degenerate";
  }

  std::string assign_csv = "point_id,cluster_id\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    assign_csv += std::to_string(i) + "," + std::to_string(labels[i]) + "\n";
  }
  std::string centers_csv = "cluster_id";
  for (Index r = 0; r < centers.rows(); ++r) centers_csv += ",coord_" + std::to_string(r + 1);
  centers_csv += ",status\n";
  for (Index j = 0; j < centers.cols(); ++j) {
    centers_csv += std::to_string(j);
    for (Index r = 0; r < centers.rows(); ++r) centers_csv += "," + format_double(centers(r, j));
    centers_csv += "," + status + "\n";
  }
  write_file(o.output + "_assignments.csv", assign_csv);
  write_file(o.output + "_centers.csv", centers_csv);
  return kExitOk;
}

int cmd_compare(const RunOptions& o) {
  const Inputs in = load_inputs(o);
  const VariantConfig config = build_config(o, in.points);
  if (o.variant == "trimmed" && o.tau_opt->count() > 0) {
    throw ConfigError("--tau is not used by compare: trimmed runs are compared with plain Lloyd iterations");
  }
  const RunReport rep = compare(in.points, in.centers0, config);

  nlohmann::json objectives = {{"transformer", rep.transformer_objective}, {"oracle", rep.oracle_objective}};
  std::string csv = "gap,match,status,objectives\n";
  csv += format_double(rep.gap) + "," + format_double(rep.match) + "," + to_string(rep.status) + "," +
         csv_quote(objectives.dump()) + "\n";
  write_file(o.output, csv);
  return kExitOk;
}

struct SweepOptions {
  std::string spec_path;
  std::string output;
  int workers = 1;
  bool timing = false;
};

int cmd_sweep(const SweepOptions& o) {
  std::string text;
  try {
    text = read_file(o.spec_path);
  } catch (const CsvParseError&) {
    throw SpecParseError("cannot open " + o.spec_path);
  }
  const SweepSpec spec = parse_sweep_spec(text);
  if (o.workers < 1) throw ConfigError("--workers must be >= 1");
  const std::vector<SweepRow> rows = sweep(spec, o.workers);

  std::string csv = "gamma,d,n,k,scale,seed,gap,match,status,wall_ms\n";
  for (const SweepRow& r : rows) {
    csv += format_double(r.gamma) + "," + std::to_string(r.d) + "," + std::to_string(r.n) + "," +
           std::to_string(r.k) + "," + format_double(r.scale) + "," + std::to_string(r.seed) + "," +
           format_double(r.report.gap) + "," + format_double(r.report.match) + "," + to_string(r.report.status) +
           "," + format_double(o.timing ? r.report.wall_ms : 0.0) + "\n";
  }
  write_file(o.output, csv);
  return kExitOk;
}

struct GenerateOptions {
  long long n = 100;
  long long d = 2;
  long long k = 3;
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::string output;
  std::string centers_output;
};

std::string points_csv(const Matrix& m) {
  std::string csv;
  for (Index r = 0; r < m.rows(); ++r) csv += (r == 0 ? "x" : ",x") + std::to_string(r + 1);
  csv += "\n";
  for (Index i = 0; i < m.cols(); ++i) {
    for (Index r = 0; r < m.rows(); ++r) csv += (r == 0 ? "" : ",") + format_double(m(r, i));
    csv += "\n";
  }
  return csv;
}

int cmd_generate(const GenerateOptions& o) {
  const Mixture mix = gen_mixture(o.n, o.d, o.k, o.seed, o.scale);
  write_file(o.output, points_csv(mix.points));
  if (!o.centers_output.empty()) write_file(o.centers_output, points_csv(mix.centers0));
  return kExitOk;
}

}  // namespace

Matrix parse_points_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool seen_first = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size(); ++c) numeric = numeric && parse_number(fields[c], values[c]);
    if (!seen_first) {
      seen_first = true;
      width = fields.size();
      if (!numeric) continue;  // header
    }
    if (fields.size() != width) {
      throw CsvParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                          " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_number(fields[c], values[c]) || !std::isfinite(values[c])) {
        throw CsvParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                            ": not a finite number: '" + fields[c] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw CsvParseError("no data rows");
  Matrix m(static_cast<Index>(width), static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Index>(c), static_cast<Index>(i)) = rows[i][c];
  }
  return m;
}

Matrix read_points_csv(const std::string& path) {
  try {
    return parse_points_csv(read_file(path));
  } catch (const CsvParseError& e) {
    throw CsvParseError(path + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"k-means transformer: cluster, compare with reference algorithms, and sweep parameters", "kmt"};
  app.require_subcommand(1);

  RunOptions cluster_opts;
  CLI::App* cluster = app.add_subcommand("cluster", "Cluster a CSV of points");
  add_run_options(cluster, cluster_opts);
  cluster->add_option("--output,-o", cluster_opts.output, "Output prefix for _assignments.csv and _centers.csv")
      ->required();
  cluster->add_option("--engine", cluster_opts.engine, "Transformer or plain reference algorithm")
      ->check(CLI::IsMember({"transformer", "oracle"}))
      ->capture_default_str();

  RunOptions compare_opts;
  CLI::App* cmp = app.add_subcommand("compare", "Compare the transformer with its reference algorithm");
  add_run_options(cmp, compare_opts);
  cmp->add_option("--output,-o", compare_opts.output, "Report CSV")->required();

  SweepOptions sweep_opts;
  CLI::App* sw = app.add_subcommand("sweep", "Run a JSON-specified parameter grid");
  sw->add_option("--spec,--input,-i", sweep_opts.spec_path, "JSON sweep specification")->required();
  sw->add_option("--output,-o", sweep_opts.output, "Result CSV")->required();
  sw->add_option("--workers", sweep_opts.workers, "Worker threads")->capture_default_str();
  sw->add_flag("--timing", sweep_opts.timing, "Record wall-clock times (output is then not reproducible)");

  GenerateOptions gen_opts;
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic Gaussian mixture as CSV");
  gen->add_option("--n", gen_opts.n, "Points")->capture_default_str();
  gen->add_option("--d", gen_opts.d, "Dimension")->capture_default_str();
  gen->add_option("--k", gen_opts.k, "Components")->capture_default_str();
  gen->add_option("--scale", gen_opts.scale, "Scale factor")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Seed")->capture_default_str();
  gen->add_option("--output,-o", gen_opts.output, "Points CSV")->required();
  gen->add_option("--centers-output", gen_opts.centers_output, "Initial centers CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (cluster->parsed()) return cmd_cluster(cluster_opts);
    if (cmp->parsed()) return cmd_compare(compare_opts);
    if (sw->parsed()) return cmd_sweep(sweep_opts);
    return cmd_generate(gen_opts);
  } catch (const CsvParseError& e) {
    err << "kmt: " << e.what() << "\n";
    return kExitParse;
  } catch (const SpecParseError& e) {
    err << "kmt: " << e.what() << "\n";
    return kExitParse;
  } catch (const OutputError& e) {
    err << "kmt: " << e.what() << "\n";
    return kExitOutputFailure;
  } catch (const std::exception& e) {
    err << "kmt: " << e.what() << "\n";
    return kExitPrecondition;
  }
}

}  // namespace kmt
