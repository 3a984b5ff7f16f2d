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
#include <optional>
#include <string>
#include <vector>

#include "ndlp/config.hpp"
#include "ndlp/ops.hpp"
#include "ndlp/params.hpp"

namespace ndlp {

/// Rain-location prior, [1,H,W] with values in [0,1].
template <typename S>
using PriorMap = Tensor<S>;

/// Sinusoidal position code, [fx+fy+fz, H, W]: x block, then y, then z.
template <typename S>
using PositionCode = Tensor<S>;

template <typename S>
struct ConvWeights {
  Tensor<S> weight;
  Tensor<S> bias;  // may be undefined
};

template <typename S>
struct RlpWeights {
  ConvWeights<S> head;                              // 4 -> rlp_channels, 3x3
  std::vector<std::array<ConvWeights<S>, 2>> res;  // conv, relu, conv, + skip
  ConvWeights<S> tail;                              // rlp_channels -> 1, 3x3
};

template <typename S>
struct EcaWeights {
  ConvWeights<S> reduce;  // C -> C/r on the pooled vector
  ConvWeights<S> expand;  // C/r -> C
};

template <typename S>
struct PpmWeights {
  std::optional<EcaWeights<S>> eca;
  ConvWeights<S> fuse;  // C + code channels -> C, 1x1
};

template <typename S>
struct MdtaWeights {
  Tensor<S> norm;         // [C]
  Tensor<S> qkv;          // [3C,C,1,1]
  Tensor<S> qkv_dw;       // [3C,1,3,3]
  Tensor<S> temperature;  // [heads]
  Tensor<S> proj;         // [C,C,1,1]
  int heads = 1;
};

template <typename S>
struct GdfnWeights {
  Tensor<S> norm;     // [C]
  Tensor<S> expand;   // [2h,C,1,1]
  Tensor<S> dw;       // [2h,1,3,3]
  Tensor<S> project;  // [C,h,1,1]
};

template <typename S>
struct BlockWeights {
  MdtaWeights<S> attn;
  GdfnWeights<S> ffn;
};

template <typename S>
struct NetWeights {
  RlpWeights<S> rlp;
  ConvWeights<S> embed;
  std::optional<PpmWeights<S>> ppm;
  std::array<std::vector<BlockWeights<S>>, 4> encoder;
  std::array<Tensor<S>, 3> down;  // level l -> l+1, before pixel_unshuffle
  std::array<Tensor<S>, 3> up;    // level l+1 -> l, before pixel_shuffle
  std::array<Tensor<S>, 3> fuse;  // skip concat -> level dim
  std::array<std::vector<BlockWeights<S>>, 3> decoder;
  ConvWeights<S> output;
};

// Registration: shapes and names only, values are set by initialize().
template <typename S>
RlpWeights<S> register_rlp(const NetConfig& cfg, ParameterSet<S>& params);
template <typename S>
EcaWeights<S> register_eca(const std::string& prefix, int channels, int reduction,
                           ParameterSet<S>& params);
template <typename S>
MdtaWeights<S> register_mdta(const std::string& prefix, int channels, int heads,
                             ParameterSet<S>& params);
template <typename S>
GdfnWeights<S> register_gdfn(const std::string& prefix, int channels, double expansion,
                             ParameterSet<S>& params);
template <typename S>
NetWeights<S> register_net(const NetConfig& cfg, ParameterSet<S>& params);

// Forward building blocks ------------------------------------------------------

/// One recursion of the prior network on concat(image, prior).
template <typename S>
PriorMap<S> rlp_stage(const Tensor<S>& image, const PriorMap<S>& prior, const RlpWeights<S>& w);

/// Runs `stages` recursions with shared weights starting from a constant 0.5 map.
template <typename S>
PriorMap<S> rlp_forward(const Tensor<S>& image, int stages, const RlpWeights<S>& w);

/// Three-axis sinusoidal code: pos_x = column, pos_y = row,
/// pos_z = z_scale * prior. Channel 2i of an axis block holds
/// sin(pos / base^(2i/feats)) and channel 2i+1 the matching cosine.
template <typename S>
PositionCode<S> spc_encode(Index height, Index width, const PriorMap<S>& prior,
                           const NetConfig& cfg);

/// Channel attention weights A in (0,1), one per channel of x.
template <typename S>
Tensor<S> eca_attention(const Tensor<S>& x, const EcaWeights<S>& w);
template <typename S>
Tensor<S> eca_forward(const Tensor<S>& x, const EcaWeights<S>& w);

/// Position perception: concat position code, channel attention, 1x1 fuse.
/// With no weights (PPM disabled) the input handle is returned unchanged.
template <typename S>
Tensor<S> ppm_forward(const Tensor<S>& embedded, const PriorMap<S>& prior, const NetConfig& cfg,
                      const PpmWeights<S>* w);

/// Transposed (channel) self-attention with residual. When `attention` is
/// non-null the per-head (C/h)x(C/h) attention matrices are appended to it.
template <typename S>
Tensor<S> mdta_forward(const Tensor<S>& x, const MdtaWeights<S>& w,
                       std::vector<Tensor<S>>* attention = nullptr);

/// Gated depthwise-conv feed-forward with residual.
template <typename S>
Tensor<S> gdfn_forward(const Tensor<S>& x, const GdfnWeights<S>& w);

enum class Mode { kTrain, kInfer };

/// Full network. Inputs whose sides are not multiples of 8 are reflect-padded
/// and the output cropped back; kInfer clamps the result to [0,1].
template <typename S>
Tensor<S> net_forward(const Tensor<S>& image, const NetConfig& cfg, const NetWeights<S>& w,
                      Mode mode = Mode::kTrain);

/// Owns a parameter set together with the structured view over it.
template <typename S>
class Ndlpnet {
 public:
  explicit Ndlpnet(NetConfig cfg);
  Ndlpnet(const Ndlpnet&) = delete;
  Ndlpnet& operator=(const Ndlpnet&) = delete;
  Ndlpnet(Ndlpnet&&) = default;
  Ndlpnet& operator=(Ndlpnet&&) = default;

  const NetConfig& config() const { return cfg_; }
  ParameterSet<S>& parameters() { return params_; }
  const ParameterSet<S>& parameters() const { return params_; }
  const NetWeights<S>& weights() const { return weights_; }

  void initialize(std::mt19937_64& rng) { params_.initialize(rng); }
  Tensor<S> forward(const Tensor<S>& image, Mode mode = Mode::kTrain) const {
    return net_forward(image, cfg_, weights_, mode);
  }

 private:
  NetConfig cfg_;
  ParameterSet<S> params_;
  NetWeights<S> weights_;
};

}  // namespace ndlp
