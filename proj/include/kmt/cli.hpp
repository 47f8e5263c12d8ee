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

#ifndef KMT_CLI_HPP
#define KMT_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "kmt/matcore.hpp"

namespace kmt {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitOutputFailure = 1,  // an output file could not be written
  kExitParse = 2,          // bad flags, unreadable or malformed input
  kExitPrecondition = 3,   // input parsed but violates a requirement (e.g. k > n)
};

/// Malformed CSV input; the message names the offending line.
class CsvParseError : public Error {
 public:
  using Error::Error;
};

/// Reads one point per row. A first row that is not entirely numeric is
/// treated as a header. Returns d x n.
Matrix read_points_csv(const std::string& path);
Matrix parse_points_csv(const std::string& text);

/// Shortest round-trip decimal form ("inf", "-inf" and "nan" for non-finite values).
std::string format_double(double v);

/// Runs the tool with `args` excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kmt

#endif  // KMT_CLI_HPP
