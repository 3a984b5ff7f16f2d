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

#include <vector>

#include "ndlp/tensor.hpp"

// Differentiable operator set. Every function is explicitly instantiated for
// float (training) and double (gradient checking). Image tensors are C x H x W.
namespace ndlp {

enum class PadMode { kZero, kReflect };

struct Padding {
  PadMode mode = PadMode::kZero;
  Index size = 0;

  static Padding zero(Index p) { return {PadMode::kZero, p}; }
  static Padding reflect(Index p) { return {PadMode::kReflect, p}; }
  /// Zero padding that keeps H x W for an odd kernel at stride 1.
  static Padding same(Index kernel) { return {PadMode::kZero, kernel / 2}; }
};

/// Reflection index without edge repetition, folded so any offset is valid.
Index reflect_index(Index i, Index n);

// Convolution ---------------------------------------------------------------

/// Cross-correlation of x [Cin,H,W] with w [Cout,Cin,kh,kw]; `bias` may be
/// undefined. Output extent is (H + 2p - kh) / stride + 1.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias = {},
                 Index stride = 1, Padding padding = {});

/// Per-channel 3x3 convolution, w [C,1,3,3], zero padding 1.
template <typename S>
Tensor<S> depthwise_conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias = {});

// Elementwise ---------------------------------------------------------------

template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
/// Hadamard product.
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> scale(const Tensor<S>& a, S factor);
template <typename S> Tensor<S> add_scalar(const Tensor<S>& a, S value);
template <typename S> Tensor<S> relu(const Tensor<S>& a);
/// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename S> Tensor<S> gelu(const Tensor<S>& a);
template <typename S> Tensor<S> sigmoid(const Tensor<S>& a);

/// x [C,H,W] times a per-channel vector a [C], broadcast over space.
template <typename S> Tensor<S> mul_channel(const Tensor<S>& x, const Tensor<S>& a);
/// x times a learnable single-element tensor.
template <typename S> Tensor<S> mul_scalar_tensor(const Tensor<S>& x, const Tensor<S>& s);

// Reductions and normalization ------------------------------------------------

template <typename S> Tensor<S> softmax(const Tensor<S>& x, int axis);
/// Bias-free layer norm across channels at each pixel, eps = 1e-6.
template <typename S> Tensor<S> layer_norm_channels(const Tensor<S>& x, const Tensor<S>& gamma);
/// [C,H,W] -> [C] spatial mean.
template <typename S> Tensor<S> global_avg_pool(const Tensor<S>& x);
/// Rows of a rank-2 tensor scaled to unit L2 norm (norm floored at 1e-12).
template <typename S> Tensor<S> l2_normalize_rows(const Tensor<S>& x);
template <typename S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> sum(const Tensor<S>& x);
template <typename S> Tensor<S> mean(const Tensor<S>& x);

// Rearrangement ---------------------------------------------------------------

/// [C,H,W] -> [C r^2, H/r, W/r]; out channel c*r*r + i*r + j holds in[c, h*r+i, w*r+j].
template <typename S> Tensor<S> pixel_unshuffle(const Tensor<S>& x, Index r);
/// Inverse of pixel_unshuffle.
template <typename S> Tensor<S> pixel_shuffle(const Tensor<S>& x, Index r);
template <typename S> Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis);
/// Half-open range [begin, end) along `axis`.
template <typename S> Tensor<S> slice(const Tensor<S>& x, int axis, Index begin, Index end);
template <typename S> Tensor<S> reshape(const Tensor<S>& x, Shape shape);
/// Rank-2 transpose.
template <typename S> Tensor<S> transpose(const Tensor<S>& x);
template <typename S>
Tensor<S> pad_reflect(const Tensor<S>& x, Index top, Index bottom, Index left, Index right);
template <typename S> Tensor<S> crop(const Tensor<S>& x, Index top, Index left, Index h, Index w);

}  // namespace ndlp
