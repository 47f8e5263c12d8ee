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

#ifndef KMT_ERRORS_HPP
#define KMT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kmt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Zero variance, zero norm, or a column whose weights cannot be normalized.
// Recoverable: callers may choose to record a status instead of aborting.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A parameter or input violates a documented precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kmt

#endif  // KMT_ERRORS_HPP
