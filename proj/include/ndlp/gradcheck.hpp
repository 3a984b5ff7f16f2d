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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ndlp/tensor.hpp"

namespace ndlp {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckReport {
  std::vector<std::string> names;
  /// Max relative error per checked input, same order as `names`.
  std::vector<double> max_rel_error;
  double worst = 0;
  double tolerance = kGradCheckTolerance;
  bool passed = false;
};

using GradFn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

/// Compares tape gradients with central differences for every input that
/// requires grad. Non-scalar outputs are reduced with a fixed random
/// projection so that every output element contributes. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3). With
/// `max_checks_per_input` > 0 only that many evenly strided elements of each
/// input are perturbed.
GradCheckReport grad_check(const GradFn& fn, const std::vector<Tensor<double>>& inputs,
                           const std::vector<std::string>& names,
                           double tolerance = kGradCheckTolerance, double step = kGradCheckStep,
                           Index max_checks_per_input = 0);

struct GradCheckCase {
  std::string op;
  std::string shape;
  GradCheckReport report;
};

/// Runs the registered differentiable ops, three random shapes each, with
/// inputs drawn uniformly from [-1, 1].
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed = 7,
                                               double tolerance = kGradCheckTolerance);

}  // namespace ndlp
