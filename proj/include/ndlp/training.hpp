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
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ndlp/config.hpp"
#include "ndlp/net.hpp"
#include "ndlp/synth.hpp"

namespace ndlp {

/// Mean absolute error; the subgradient at ties is 0.
template <typename S>
Tensor<S> l1_loss(const Tensor<S>& pred, const Tensor<S>& target);

/// lr_min + 0.5 (lr_max - lr_min) (1 + cos(pi t / T)).
double cosine_lr(std::int64_t t, std::int64_t total, double lr_max, double lr_min);

struct AdamMoments {
  std::vector<Tensor<float>::Array> m;
  std::vector<Tensor<float>::Array> v;

  static AdamMoments zeros_like(const ParameterSet<float>& params);
};

/// One AdamW update with bias correction for the 1-based `step`:
/// p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
/// Every parameter must carry a finite gradient.
void adamw_step(ParameterSet<float>& params, AdamMoments& moments, std::int64_t step, double lr,
                const OptimConfig& cfg);

/// The checkpointable whole of a training run.
struct TrainState {
  RunConfig config;
  Ndlpnet<float> net;
  AdamMoments moments;
  std::int64_t t = 0;
  std::int64_t total = 0;
  std::mt19937_64 rng;

  /// Fresh state: parameters initialized from config.optim.seed.
  static TrainState create(const RunConfig& config);
};

// Checkpoint file ----------------------------------------------------------------
//
//   "NDLP" | u32 version | u32 tensor count
//   per tensor: u32 name length | name | u32 rank | u64 extents | f32 values
//   trailer: u64 t | u64 T | u32 len | PRNG state | u32 len | config JSON
//
// All integers and floats little-endian. Adam moments are stored as tensors
// named "adam.m/<param>" and "adam.v/<param>".

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::int64_t t = 0;
  std::int64_t total = 0;
  std::string rng_state;
  std::string config_json;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint snapshot(const TrainState& state);
/// Rebuilds a state, checking every parameter name and shape against the
/// network described by the stored config.
TrainState restore(const Checkpoint& ckpt);

void save_state(const TrainState& state, const std::filesystem::path& path);
TrainState load_state(const std::filesystem::path& path);

// Loop ---------------------------------------------------------------------------

struct Dataset {
  std::vector<ImagePair> train;
  std::vector<ImagePair> test;
};

/// Same random window (and optional horizontal flip) applied to both images.
/// Returns (rain crop, clean crop).
std::pair<Image, Image> sample_patch(const ImagePair& pair, int patch, bool hflip,
                                     std::mt19937_64& rng);

struct LogRow {
  std::int64_t iter = 0;
  double lr = 0;
  double l1 = 0;
  std::optional<double> psnr_val;
};

/// Runs iterations state.t .. state.total. Writes `log.csv`, a checkpoint
/// every optim.checkpoint_every iterations and `final.ndlp` into `out_dir`.
/// A non-finite loss saves `abort.ndlp` (the last good state) and rethrows.
std::vector<LogRow> train(TrainState& state, const Dataset& data,
                          const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

/// Forward pass on one image in inference mode (clamped to [0,1]).
Image derain(const Ndlpnet<float>& net, const Image& rain);

}  // namespace ndlp
