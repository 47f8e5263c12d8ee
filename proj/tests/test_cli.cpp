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

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kmt/cli.hpp"

using namespace kmt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("kmt_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("parse_points_csv") {
  const Matrix with_header = parse_points_csv("x1,x2\n1,2\n3,4\n");
  const Matrix without = parse_points_csv("1,2\n3,4\n");
  CHECK(with_header == without);
  CHECK(with_header.rows() == 2);
  CHECK(with_header(1, 1) == 4.0);
  try {
    parse_points_csv("1,2\n3,oops\n");
    FAIL("expected a parse error");
  } catch (const CsvParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_points_csv("1,2\n3\n"), CsvParseError);
  CHECK_THROWS_AS(parse_points_csv("1,nan\n"), CsvParseError);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("cluster, compare and generate") {
  TempDir dir;
  const std::string points = dir / "points.csv";
  const std::string centers = dir / "centers.csv";
  REQUIRE(cli({"generate", "--n", "120", "--d", "2", "--k", "3", "--seed", "4", "-o", points, "--centers-output",
               centers})
              .code == kExitOk);
  CHECK(count_lines(slurp(points)) == 121);

  SUBCASE("cluster output is reproducible") {
    const std::vector<std::string> args{"cluster", "-i", points, "--centers", centers, "-o", dir / "run"};
    REQUIRE(cli(args).code == kExitOk);
    const std::string assign = slurp(dir / "run_assignments.csv");
    const std::string cent = slurp(dir / "run_centers.csv");
    CHECK(assign.rfind("point_id,cluster_id\n", 0) == 0);
    CHECK(count_lines(assign) == 121);
    CHECK(cent.rfind("cluster_id,coord_1,coord_2,status\n", 0) == 0);
    REQUIRE(cli(args).code == kExitOk);
    CHECK(slurp(dir / "run_assignments.csv") == assign);
    CHECK(slurp(dir / "run_centers.csv") == cent);

    std::vector<std::string> oracle = args;
    oracle.back() = dir / "oracle";
    oracle.insert(oracle.end(), {"--engine", "oracle"});
    REQUIRE(cli(oracle).code == kExitOk);
    CHECK(slurp(dir / "oracle_assignments.csv") == assign);
  }
  SUBCASE("compare report") {
    REQUIRE(cli({"compare", "-i", points, "--centers", centers, "-o", dir / "report.csv"}).code == kExitOk);
    const std::string report = slurp(dir / "report.csv");
    CHECK(report.rfind("gap,match,status,objectives\n0,1,ok,", 0) == 0);
  }
  SUBCASE("coincident centers are a tie") {
    write(dir / "tie.csv", "0\n1\n2\n");
    write(dir / "tie_centers.csv", "0\n2\n");
    REQUIRE(cli({"compare", "-i", dir / "tie.csv", "--centers", dir / "tie_centers.csv", "-o", dir / "r.csv"}).code ==
            kExitOk);
    CHECK(slurp(dir / "r.csv").find(",tie,") != std::string::npos);
  }
  SUBCASE("exit codes") {
    CHECK(cli({"cluster", "-i", points}).code == kExitParse);
    CHECK(cli({"bogus"}).code == kExitParse);
    CHECK(cli({"cluster", "-i", dir / "missing.csv", "-o", dir / "x"}).code == kExitParse);
    write(dir / "bad.csv", "1,2\n3,x\n");
    const Result bad = cli({"cluster", "-i", dir / "bad.csv", "-k", "1", "-o", dir / "x"});
    CHECK(bad.code == kExitParse);
    CHECK(bad.err.find("line 2") != std::string::npos);
    CHECK(cli({"cluster", "-i", points, "-k", "500", "-o", dir / "x"}).code == kExitPrecondition);
    CHECK(cli({"cluster", "-i", points, "-k", "3", "--gamma-mode", "hot", "-o", dir / "x"}).code == kExitParse);
    CHECK(cli({"cluster", "-i", points, "-k", "3", "-o", dir / "no/such/dir/x"}).code == kExitOutputFailure);
    CHECK(cli({"compare", "-i", points, "-k", "3", "--variant", "trimmed", "--gamma-nm", "0.1", "--tau", "50", "-o",
               dir / "x.csv"})
              .code == kExitPrecondition);
  }
}

TEST_CASE("sweep") {
  TempDir dir;
  write(dir / "spec.json", R"({"gammas": [2, "inf"], "dims": [2], "ns": [40], "ks": [2], "scales": [1, 3],
    "T": 3, "seeds": [1, 2], "variant": {"kind": "lloyd"}})");
  const std::vector<std::string> args{"sweep", "--spec", dir / "spec.json", "-o", dir / "out.csv", "--workers", "2"};
  REQUIRE(cli(args).code == kExitOk);
  const std::string first = slurp(dir / "out.csv");
  CHECK(first.rfind("gamma,d,n,k,scale,seed,gap,match,status,wall_ms\n", 0) == 0);
  CHECK(count_lines(first) == 9);
  REQUIRE(cli(args).code == kExitOk);
  CHECK(slurp(dir / "out.csv") == first);

  write(dir / "broken.json", "{\"gammas\": [");
  CHECK(cli({"sweep", "--spec", dir / "broken.json", "-o", dir / "o.csv"}).code == kExitParse);
}

TEST_CASE("installed binary reports exit codes to the shell") {
  const char* bin = std::getenv("KMT_BIN");
  if (bin == nullptr) return;
  const std::string quiet = " >/dev/null 2>&1";
  const int help = std::system((std::string(bin) + " --help" + quiet).c_str());
  CHECK(WEXITSTATUS(help) == 0);
  const int bad = std::system((std::string(bin) + " cluster --nonsense" + quiet).c_str());
  CHECK(WEXITSTATUS(bad) == kExitParse);
}
