// Copyright 2026 The NDLP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ndlp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation produced NaN or Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Misuse of the gradient tape (double backward, non-scalar loss, ...).
class TapeError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename E, typename... Args>
[[noreturn]] void raise(const char* file, int line, const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  os << " [" << file << ":" << line << "]";
  throw E(os.str());
}

}  // namespace detail
}  // namespace ndlp

#define NDLP_CHECK_AS(E, cond, ...)                                   \
  do {                                                                \
    if (!(cond)) ::ndlp::detail::raise<E>(__FILE__, __LINE__, __VA_ARGS__); \
  } while (0)

#define NDLP_CHECK(cond, ...) NDLP_CHECK_AS(::ndlp::Error, cond, __VA_ARGS__)
#define NDLP_CHECK_SHAPE(cond, ...) NDLP_CHECK_AS(::ndlp::ShapeError, cond, __VA_ARGS__)
