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

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <system_error>

#include "ndlp/image.hpp"
#include "ndlp/tensor.hpp"

namespace ndlp::testing {

// Dark gradient sky with a few soft light sources.
inline Image night_scene(Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img = Image::zeros({3, h, w});
  auto& v = img.mutable_values();
  struct Light { double y, x, r, c[3]; };
  Light lights[4];
  for (auto& l : lights) {
    l.y = u(rng) * h;
    l.x = u(rng) * w;
    l.r = 2.0 + 6.0 * u(rng);
    for (double& c : l.c) c = 0.3 + 0.6 * u(rng);
  }
  for (int c = 0; c < 3; ++c)
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        double s = 0.04 + 0.12 * static_cast<double>(y) / static_cast<double>(h);
        for (const auto& l : lights) {
          const double d2 = (y - l.y) * (y - l.y) + (x - l.x) * (x - l.x);
          s += l.c[c] * std::exp(-d2 / (2 * l.r * l.r));
        }
        v[(c * h + y) * w + x] = static_cast<float>(std::round(std::min(s, 1.0) * 255.0) / 255.0);
      }
  return img;
}

template <typename S>
Tensor<S> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                        bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  typename Tensor<S>::Array v(numel(shape));
  for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<S>(u(rng));
  return Tensor<S>(std::move(shape), std::move(v), requires_grad);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ndlp_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace ndlp::testing
