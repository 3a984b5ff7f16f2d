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

#include <filesystem>

#include "ndlp/tensor.hpp"

namespace ndlp {

/// RGB image as a [3,H,W] float tensor with values in [0,1].
using Image = Tensor<float>;

/// Reads an 8-bit RGB, RGBA or grayscale PNG; alpha is dropped and gray is
/// replicated to three channels. Values are byte / 255.
Image load_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG (or gray for single-channel input), rounding
/// half up after clamping to [0,1].
void save_png(const Image& image, const std::filesystem::path& path);

/// byte = floor(clamp(v,0,1) * 255 + 0.5)
unsigned char quantize(float v);

}  // namespace ndlp
