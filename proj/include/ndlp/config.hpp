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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace ndlp {

/// Architecture hyperparameters. Defaults are the desk-scale configuration;
/// NetConfig::paper() gives the full-size network.
struct NetConfig {
  int base_dim = 16;
  int max_dim = 128;
  std::array<int, 4> blocks_per_level{1, 1, 1, 2};
  std::array<int, 4> heads_per_level{1, 2, 2, 4};
  int rlp_stages = 2;
  int rlp_channels = 32;
  int rlp_res_blocks = 3;
  /// Sinusoid features for the x, y and z (rain density) axes.
  std::array<int, 3> spc_feats{32, 32, 16};
  double spc_base = 1000.0;
  double z_scale = 50.0;
  int eca_reduction = 4;
  double gdfn_expansion = 2.0;
  bool disable_ppm = false;
  bool disable_eca = false;
  bool global_residual = true;
  /// Feed the prior map to the embedding conv as a fourth input channel.
  bool embed_prior = true;
  /// Let gradients flow from the z position code back into the prior.
  bool spc_prior_grad = false;

  static NetConfig desk() { return {}; }
  static NetConfig paper();

  int level_dim(int level) const;
  int spc_channels() const { return spc_feats[0] + spc_feats[1] + spc_feats[2]; }
  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

struct OptimConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double lr_max = 3e-4;
  double lr_min = 1e-6;
  int batch = 2;
  int patch = 32;
  std::int64_t iterations = 2000;
  std::int64_t checkpoint_every = 100;
  std::uint64_t seed = 0;
  bool hflip = true;

  static OptimConfig desk() { return {}; }
  static OptimConfig paper();
  void validate() const;
};

/// Procedural night-rain renderer settings. Lengths are in pixels at a
/// reference height of 512 and scale with the image height.
struct RainParams {
  double streaks_per_mp_min = 200;
  double streaks_per_mp_max = 800;
  double angle_mean_deg = 10;
  double angle_std_deg = 5;
  double length_min = 15;
  double length_max = 60;
  double thickness_min = 1;
  double thickness_max = 2;
  double intensity_min = 0.2;
  double intensity_max = 1.0;
  double blur_sigma_min = 0.5;
  double blur_sigma_max = 1.5;
  double luma_gain = 0.7;
  double luma_floor = 0.3;
  double luma_blur_sigma = 8;
  double noise_sigma_min = 0.005;
  double noise_sigma_max = 0.02;
  std::uint64_t seed = 0;
  double train_fraction = 0.92;
  bool emit_masks = false;

  void validate() const;
};

struct PathConfig {
  std::string clean_dir;
  std::string data;
  std::string out;
  std::string resume;
};

/// Everything a CLI run needs, read from a flat JSON object with dotted keys
/// ("net.base_dim", "optim.lr_max", "synth.seed", ...). Unknown keys throw.
struct RunConfig {
  NetConfig net;
  OptimConfig optim;
  RainParams synth;
  PathConfig paths;

  static RunConfig from_json(const nlohmann::json& flat);
  static RunConfig load(const std::filesystem::path& path);
  /// Overlays the keys present in `flat` onto this config.
  void merge(const nlohmann::json& flat);
  nlohmann::json to_json() const;
  void validate() const;
};

nlohmann::json net_config_to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const nlohmann::json& flat);
nlohmann::json rain_params_to_json(const RainParams& p);

}  // namespace ndlp
