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
#include <string>
#include <vector>

#include "ndlp/image.hpp"

namespace ndlp {

/// PSNR in dB for images in [0,1] (MAX = 1), over all channels and pixels.
/// Identical images report kPsnrCap.
double psnr(const Image& a, const Image& b);
inline constexpr double kPsnrCap = 100.0;

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 1, valid-region filtering, averaged over channels and space.
double ssim(const Image& a, const Image& b);

struct MetricEntry {
  std::string file;
  double psnr = 0;
  double ssim = 0;
};

struct MetricReport {
  std::vector<MetricEntry> entries;
  double mean_psnr = 0;
  double mean_ssim = 0;

  /// `file,psnr,ssim` rows followed by a MEAN row.
  std::string to_csv() const;
};

/// Scores every PNG in `pred_dir` against the same-named file in `gt_dir`.
/// Both directories must hold the same file names.
MetricReport eval_dir(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

}  // namespace ndlp
