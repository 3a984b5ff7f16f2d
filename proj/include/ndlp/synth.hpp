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
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ndlp/config.hpp"
#include "ndlp/image.hpp"

namespace ndlp {

struct ImagePair {
  std::string id;
  Image clean;
  Image rain;
  std::optional<Tensor<float>> mask;
};

/// Independent PRNG seed for one image, so per-image synthesis does not
/// depend on processing order.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view id);

/// Separable Gaussian blur of every channel of a [C,H,W] tensor with
/// clamp-to-edge borders. sigma == 0 returns a copy.
Tensor<float> gaussian_blur(const Tensor<float>& x, double sigma);

/// Rain streak mask [1,H,W] in [0,1]: anti-aliased segments accumulated with
/// coverage-weighted intensity, blurred, then clipped.
Tensor<float> synth_streak_mask(Index height, Index width, const RainParams& params,
                                std::mt19937_64& rng);

/// v = clamp(gain * blur(luma(clean)) + floor, 0, 1), [1,H,W].
Tensor<float> visibility_map(const Image& clean, const RainParams& params);

/// Screen-blends the luminance-weighted mask over `clean`, then adds
/// Gaussian read noise with a sampled sigma and clips to [0,1].
Image compose_rainy(const Image& clean, const Tensor<float>& mask, const RainParams& params,
                    std::mt19937_64& rng);

struct DatasetIndex {
  std::vector<std::string> ids;
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  RainParams params;

  nlohmann::json to_json() const;
};

/// Number of training images for a dataset of n under `train_fraction`:
/// floor(fraction * n), clamped so that n >= 2 keeps at least one of each.
std::size_t train_count(std::size_t n, double train_fraction);

/// Renders `<out>/rain`, copies `<out>/gt` byte for byte, optionally writes
/// `<out>/mask`, and writes `<out>/manifest.json`.
DatasetIndex build_dataset(const std::filesystem::path& clean_dir,
                           const std::filesystem::path& out_dir, const RainParams& params,
                           bool force = false);

DatasetIndex load_manifest(const std::filesystem::path& root);

std::vector<ImagePair> load_pairs(const std::filesystem::path& root,
                                  const std::vector<std::string>& ids);

}  // namespace ndlp
