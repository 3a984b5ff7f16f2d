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

#include "ndlp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace ndlp {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same(const Image& a, const Image& b, const char* what) {
  NDLP_CHECK_SHAPE(a.shape() == b.shape(), what, ": shape mismatch ", to_string(a.shape()), " vs ",
                   to_string(b.shape()));
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid-region filter of one h x w plane.
std::vector<double> filter_valid(const std::vector<double>& in, Index h, Index w) {
  static const auto taps = gaussian_taps();
  const Index ho = h - kWindow + 1, wo = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h * wo));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < wo; ++x) {
      double acc = 0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * in[y * w + x + k];
      rows[y * wo + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ho * wo));
  for (Index y = 0; y < ho; ++y)
    for (Index x = 0; x < wo; ++x) {
      double acc = 0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[(y + k) * wo + x];
      out[y * wo + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  const double mse =
      (a.values().template cast<double>() - b.values().template cast<double>()).square().mean();
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  require_same(a, b, "ssim");
  NDLP_CHECK_SHAPE(a.rank() == 3, "ssim: expected [C,H,W]");
  const Index c = a.dim(0), h = a.dim(1), w = a.dim(2), plane = h * w;
  NDLP_CHECK_SHAPE(h >= kWindow && w >= kWindow, "ssim: image ", h, "x", w,
                   " smaller than the 11x11 window");

  double total = 0;
  Index count = 0;
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
  for (Index ch = 0; ch < c; ++ch) {
    for (Index i = 0; i < plane; ++i) {
      x[i] = a.values()[ch * plane + i];
      y[i] = b.values()[ch * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w), my = filter_valid(y, h, w);
    const auto sxx = filter_valid(xx, h, w), syy = filter_valid(yy, h, w),
               sxy = filter_valid(xy, h, w);
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + kC1) * (2 * cov + kC2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    count += static_cast<Index>(mx.size());
  }
  return total / static_cast<double>(count);
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "file,psnr,ssim\n";
  for (const auto& e : entries) os << e.file << "," << e.psnr << "," << e.ssim << "\n";
  os << "MEAN," << mean_psnr << "," << mean_ssim << "\n";
  return os.str();
}

MetricReport eval_dir(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir) {
  namespace fs = std::filesystem;
  auto list = [](const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".png")
        names.insert(e.path().filename().string());
    return names;
  };
  const auto pred = list(pred_dir), gt = list(gt_dir);
  for (const auto& n : pred)
    if (!gt.count(n)) throw IoError("no ground truth for " + n + " in " + gt_dir.string());
  for (const auto& n : gt)
    if (!pred.count(n)) throw IoError("no prediction for " + n + " in " + pred_dir.string());
  if (pred.empty()) throw IoError("no PNG files to evaluate in " + pred_dir.string());

  MetricReport report;
  for (const auto& n : pred) {
    const Image p = load_png(pred_dir / n), g = load_png(gt_dir / n);
    report.entries.push_back({n, psnr(p, g), ssim(p, g)});
    report.mean_psnr += report.entries.back().psnr;
    report.mean_ssim += report.entries.back().ssim;
  }
  report.mean_psnr /= static_cast<double>(report.entries.size());
  report.mean_ssim /= static_cast<double>(report.entries.size());
  return report;
}

}  // namespace ndlp
