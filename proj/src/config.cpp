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

#include "ndlp/config.hpp"

#include <fstream>
#include <functional>
#include <type_traits>
#include <vector>

#include "ndlp/error.hpp"

namespace ndlp {

using nlohmann::json;

NetConfig NetConfig::paper() {
  NetConfig c;
  c.base_dim = 128;
  c.max_dim = 1024;
  c.blocks_per_level = {4, 6, 6, 8};
  c.heads_per_level = {1, 2, 4, 8};
  c.rlp_stages = 6;
  return c;
}

int NetConfig::level_dim(int level) const {
  long d = base_dim;
  for (int i = 0; i < level; ++i) d = std::min<long>(d * 2, max_dim);
  return static_cast<int>(d);
}

void NetConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("net: " + m); };
  if (base_dim < 1) fail("base_dim must be >= 1");
  for (int l = 0; l < 4; ++l) {
    if (static_cast<long>(base_dim) << l > max_dim)
      fail("base_dim * 2^" + std::to_string(l) + " exceeds max_dim");
    if (blocks_per_level[l] < 0) fail("blocks_per_level must be non-negative");
    if (heads_per_level[l] < 1 || level_dim(l) % heads_per_level[l] != 0)
      fail("level " + std::to_string(l) + " dim not divisible by its head count");
  }
  for (int l = 1; l < 4; ++l)
    if (level_dim(l) % 4 != 0) fail("level dims above 0 must be divisible by 4");
  for (int f : spc_feats)
    if (f < 2 || f % 2 != 0) fail("spc_feats must be even and positive");
  if (rlp_stages < 1) fail("rlp_stages must be >= 1");
  if (rlp_channels < 1 || rlp_res_blocks < 0) fail("invalid rlp widths");
  if (spc_base <= 1) fail("spc_base must exceed 1");
  if (eca_reduction < 1) fail("eca_reduction must be >= 1");
  if (base_dim + spc_channels() < eca_reduction) fail("ECA input narrower than its reduction");
  if (static_cast<int>(base_dim * gdfn_expansion) < 1) fail("gdfn_expansion too small");
}

OptimConfig OptimConfig::paper() {
  OptimConfig c;
  c.patch = 128;
  c.iterations = 200000;
  c.checkpoint_every = 5000;
  return c;
}

void OptimConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("optim: " + m); };
  if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1)) fail("betas must lie in (0,1)");
  if (!(lr_min < lr_max) || lr_min < 0) fail("need 0 <= lr_min < lr_max");
  if (eps <= 0 || weight_decay < 0) fail("eps must be positive, weight_decay non-negative");
  if (batch < 1 || patch < 8 || patch % 8 != 0) fail("batch >= 1 and patch a multiple of 8");
  if (iterations < 0 || checkpoint_every < 1) fail("invalid iteration counts");
}

void RainParams::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synth: " + m); };
  auto range = [&](double lo, double hi, const char* name) {
    if (!(lo <= hi)) fail(std::string(name) + " range is empty");
  };
  range(streaks_per_mp_min, streaks_per_mp_max, "streak count");
  range(length_min, length_max, "length");
  range(thickness_min, thickness_max, "thickness");
  range(intensity_min, intensity_max, "intensity");
  range(blur_sigma_min, blur_sigma_max, "blur sigma");
  range(noise_sigma_min, noise_sigma_max, "noise sigma");
  if (streaks_per_mp_min < 0) fail("streak count must be non-negative");
  if (angle_mean_deg < -45 || angle_mean_deg > 45) fail("angle mean outside [-45, 45]");
  if (angle_std_deg < 0) fail("angle stddev must be non-negative");
  if (intensity_min < 0 || intensity_max > 1) fail("intensities must lie in [0,1]");
  if (length_min <= 0 || thickness_min <= 0) fail("lengths and thickness must be positive");
  if (blur_sigma_min < 0 || noise_sigma_min < 0 || luma_blur_sigma < 0) fail("negative sigma");
  if (luma_gain < 0 || luma_floor < 0 || luma_floor > 1) fail("luminance coupling out of range");
  if (!(train_fraction > 0 && train_fraction <= 1)) fail("train_fraction must lie in (0,1]");
}

// Flat key binding ------------------------------------------------------------

namespace {

struct Field {
  std::string key;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename Access>
Field bind(std::string key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  Field f;
  f.key = key;
  f.get = [access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); };
  f.set = [access, key](RunConfig& c, const json& j) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw ConfigError(key + ": expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!j.is_number()) throw ConfigError(key + ": expected a number");
      }
      access(c) = j.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };
  return f;
}

#define NDLP_FIELD(key, member) bind(key, [](RunConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      NDLP_FIELD("net.base_dim", net.base_dim),
      NDLP_FIELD("net.max_dim", net.max_dim),
      NDLP_FIELD("net.blocks_per_level", net.blocks_per_level),
      NDLP_FIELD("net.heads_per_level", net.heads_per_level),
      NDLP_FIELD("net.rlp_stages", net.rlp_stages),
      NDLP_FIELD("net.rlp_channels", net.rlp_channels),
      NDLP_FIELD("net.rlp_res_blocks", net.rlp_res_blocks),
      NDLP_FIELD("net.spc_feats", net.spc_feats),
      NDLP_FIELD("net.spc_base", net.spc_base),
      NDLP_FIELD("net.z_scale", net.z_scale),
      NDLP_FIELD("net.eca_reduction", net.eca_reduction),
      NDLP_FIELD("net.gdfn_expansion", net.gdfn_expansion),
      NDLP_FIELD("net.disable_ppm", net.disable_ppm),
      NDLP_FIELD("net.disable_eca", net.disable_eca),
      NDLP_FIELD("net.global_residual", net.global_residual),
      NDLP_FIELD("net.embed_prior", net.embed_prior),
      NDLP_FIELD("net.spc_prior_grad", net.spc_prior_grad),
      NDLP_FIELD("optim.beta1", optim.beta1),
      NDLP_FIELD("optim.beta2", optim.beta2),
      NDLP_FIELD("optim.eps", optim.eps),
      NDLP_FIELD("optim.weight_decay", optim.weight_decay),
      NDLP_FIELD("optim.lr_max", optim.lr_max),
      NDLP_FIELD("optim.lr_min", optim.lr_min),
      NDLP_FIELD("optim.batch", optim.batch),
      NDLP_FIELD("optim.patch", optim.patch),
      NDLP_FIELD("optim.iterations", optim.iterations),
      NDLP_FIELD("optim.checkpoint_every", optim.checkpoint_every),
      NDLP_FIELD("optim.seed", optim.seed),
      NDLP_FIELD("optim.hflip", optim.hflip),
      NDLP_FIELD("synth.streaks_per_mp_min", synth.streaks_per_mp_min),
      NDLP_FIELD("synth.streaks_per_mp_max", synth.streaks_per_mp_max),
      NDLP_FIELD("synth.angle_mean_deg", synth.angle_mean_deg),
      NDLP_FIELD("synth.angle_std_deg", synth.angle_std_deg),
      NDLP_FIELD("synth.length_min", synth.length_min),
      NDLP_FIELD("synth.length_max", synth.length_max),
      NDLP_FIELD("synth.thickness_min", synth.thickness_min),
      NDLP_FIELD("synth.thickness_max", synth.thickness_max),
      NDLP_FIELD("synth.intensity_min", synth.intensity_min),
      NDLP_FIELD("synth.intensity_max", synth.intensity_max),
      NDLP_FIELD("synth.blur_sigma_min", synth.blur_sigma_min),
      NDLP_FIELD("synth.blur_sigma_max", synth.blur_sigma_max),
      NDLP_FIELD("synth.luma_gain", synth.luma_gain),
      NDLP_FIELD("synth.luma_floor", synth.luma_floor),
      NDLP_FIELD("synth.luma_blur_sigma", synth.luma_blur_sigma),
      NDLP_FIELD("synth.noise_sigma_min", synth.noise_sigma_min),
      NDLP_FIELD("synth.noise_sigma_max", synth.noise_sigma_max),
      NDLP_FIELD("synth.seed", synth.seed),
      NDLP_FIELD("synth.train_fraction", synth.train_fraction),
      NDLP_FIELD("synth.emit_masks", synth.emit_masks),
      NDLP_FIELD("paths.clean_dir", paths.clean_dir),
      NDLP_FIELD("paths.data", paths.data),
      NDLP_FIELD("paths.out", paths.out),
      NDLP_FIELD("paths.resume", paths.resume),
  };
  return table;
}

#undef NDLP_FIELD

json select_prefix(const json& all, const std::string& prefix) {
  json out = json::object();
  for (const auto& [k, v] : all.items())
    if (k.rfind(prefix, 0) == 0) out[k] = v;
  return out;
}

}  // namespace

void RunConfig::merge(const json& flat) {
  if (!flat.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : flat.items()) {
    const Field* match = nullptr;
    for (const auto& f : fields())
      if (f.key == key) match = &f;
    if (match == nullptr) throw ConfigError("unknown config key '" + key + "'");
    match->set(*this, value);
  }
}

RunConfig RunConfig::from_json(const json& flat) {
  RunConfig c;
  c.merge(flat);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json out = json::object();
  for (const auto& f : fields()) out[f.key] = f.get(*this);
  return out;
}

void RunConfig::validate() const {
  net.validate();
  optim.validate();
  synth.validate();
}

json net_config_to_json(const NetConfig& cfg) {
  RunConfig rc;
  rc.net = cfg;
  return select_prefix(rc.to_json(), "net.");
}

NetConfig net_config_from_json(const json& flat) {
  RunConfig rc;
  for (const auto& [k, v] : flat.items())
    if (k.rfind("net.", 0) != 0) throw ConfigError("expected only net.* keys, got '" + k + "'");
  rc.merge(flat);
  return rc.net;
}

json rain_params_to_json(const RainParams& p) {
  RunConfig rc;
  rc.synth = p;
  return select_prefix(rc.to_json(), "synth.");
}

}  // namespace ndlp
