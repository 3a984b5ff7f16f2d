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

#include "ndlp/synth.hpp"

#include "ndlp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace ndlp {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t stream_seed(std::uint64_t seed, std::string_view id) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : id) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  // splitmix64 finalizer over the combination
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Tensor<float> gaussian_blur(const Tensor<float>& x, double sigma) {
  NDLP_CHECK_SHAPE(x.rank() == 3, "gaussian_blur: expected [C,H,W]");
  if (sigma <= 0) return x.detach();
  const Index c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0;
  for (int k = -radius; k <= radius; ++k) total += taps[k + radius] = std::exp(-k * k / (2 * sigma * sigma));
  for (double& t : taps) t /= total;

  Tensor<float>::Array out(x.size());
  std::vector<double> tmp(static_cast<std::size_t>(h * w));
  for (Index ch = 0; ch < c; ++ch) {
    const float* in = x.values().data() + ch * h * w;
    for (Index y = 0; y < h; ++y)
      for (Index xx = 0; xx < w; ++xx) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k)
          acc += taps[k + radius] * in[y * w + std::clamp<Index>(xx + k, 0, w - 1)];
        tmp[y * w + xx] = acc;
      }
    for (Index y = 0; y < h; ++y)
      for (Index xx = 0; xx < w; ++xx) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k)
          acc += taps[k + radius] * tmp[std::clamp<Index>(y + k, 0, h - 1) * w + xx];
        out[ch * h * w + y * w + xx] = static_cast<float>(acc);
      }
  }
  return Tensor<float>(x.shape(), std::move(out));
}

Tensor<float> synth_streak_mask(Index height, Index width, const RainParams& p,
                                std::mt19937_64& rng) {
  NDLP_CHECK_SHAPE(height >= 32 && width >= 32, "synth_streak_mask: image must be at least 32x32");
  p.validate();
  using Uniform = std::uniform_real_distribution<double>;

  // Draw the image-level quantities first so that the streak sequence is a
  // prefix-stable function of the count.
  const double sigma = Uniform(p.blur_sigma_min, p.blur_sigma_max)(rng);
  const double density = Uniform(p.streaks_per_mp_min, p.streaks_per_mp_max)(rng);
  const auto count = static_cast<long>(
      std::llround(density * static_cast<double>(height * width) / 1e6));
  const double length_scale = static_cast<double>(height) / 512.0;

  std::vector<double> acc(static_cast<std::size_t>(height * width), 0.0);
  for (long s = 0; s < count; ++s) {
    const double cx = Uniform(0, static_cast<double>(width))(rng);
    const double cy = Uniform(0, static_cast<double>(height))(rng);
    double angle = p.angle_mean_deg;
    if (p.angle_std_deg > 0) angle = std::normal_distribution<double>(p.angle_mean_deg, p.angle_std_deg)(rng);
    angle = std::clamp(angle, -45.0, 45.0) * std::numbers::pi / 180.0;
    const double length = Uniform(p.length_min, p.length_max)(rng) * length_scale;
    const double thickness = Uniform(p.thickness_min, p.thickness_max)(rng);
    const double intensity = Uniform(p.intensity_min, p.intensity_max)(rng);

    const double dx = std::sin(angle) * length / 2, dy = std::cos(angle) * length / 2;
    const double x0 = cx - dx, y0 = cy - dy, x1 = cx + dx, y1 = cy + dy;
    const double reach = thickness / 2 + 1;
    const Index bx0 = std::max<Index>(0, static_cast<Index>(std::floor(std::min(x0, x1) - reach)));
    const Index bx1 = std::min<Index>(width - 1, static_cast<Index>(std::ceil(std::max(x0, x1) + reach)));
    const Index by0 = std::max<Index>(0, static_cast<Index>(std::floor(std::min(y0, y1) - reach)));
    const Index by1 = std::min<Index>(height - 1, static_cast<Index>(std::ceil(std::max(y0, y1) + reach)));
    const double sx = x1 - x0, sy = y1 - y0, len2 = sx * sx + sy * sy;
    for (Index y = by0; y <= by1; ++y) {
      for (Index x = bx0; x <= bx1; ++x) {
        const double px = x + 0.5 - x0, py = y + 0.5 - y0;
        const double t = len2 > 0 ? std::clamp((px * sx + py * sy) / len2, 0.0, 1.0) : 0.0;
        const double d = std::hypot(px - t * sx, py - t * sy);
        const double coverage = std::clamp(thickness / 2 + 0.5 - d, 0.0, 1.0);
        acc[y * width + x] += intensity * coverage;
      }
    }
  }

  Tensor<float>::Array values(height * width);
  for (Index i = 0; i < values.size(); ++i) values[i] = static_cast<float>(acc[i]);
  Tensor<float> mask = gaussian_blur(Tensor<float>({1, height, width}, std::move(values)), sigma);
  mask.mutable_values() = mask.values().max(0.0f).min(1.0f);
  return mask;
}

Tensor<float> visibility_map(const Image& clean, const RainParams& p) {
  NDLP_CHECK_SHAPE(clean.rank() == 3 && clean.dim(0) == 3, "visibility_map: expected RGB image");
  const Index plane = clean.dim(1) * clean.dim(2);
  const auto& v = clean.values();
  Tensor<float>::Array luma = 0.299f * v.segment(0, plane) + 0.587f * v.segment(plane, plane) +
                              0.114f * v.segment(2 * plane, plane);
  Tensor<float> blurred =
      gaussian_blur(Tensor<float>({1, clean.dim(1), clean.dim(2)}, std::move(luma)), p.luma_blur_sigma);
  blurred.mutable_values() =
      (blurred.values() * static_cast<float>(p.luma_gain) + static_cast<float>(p.luma_floor))
          .max(0.0f)
          .min(1.0f);
  return blurred;
}

Image compose_rainy(const Image& clean, const Tensor<float>& mask, const RainParams& p,
                    std::mt19937_64& rng) {
  NDLP_CHECK_SHAPE(clean.rank() == 3 && clean.dim(0) == 3, "compose_rainy: expected RGB image");
  NDLP_CHECK_SHAPE(mask.rank() == 3 && mask.dim(0) == 1 && mask.dim(1) == clean.dim(1) &&
                       mask.dim(2) == clean.dim(2),
                   "compose_rainy: mask ", to_string(mask.shape()), " does not match image ",
                   to_string(clean.shape()));
  const Index plane = clean.dim(1) * clean.dim(2);
  const Tensor<float> vis = visibility_map(clean, p);
  const Tensor<float>::Array streak = vis.values() * mask.values();

  Image::Array out(clean.size());
  for (Index c = 0; c < 3; ++c)
    // 1 - (1 - clean)(1 - s), written so that s = 0 returns clean exactly.
    out.segment(c * plane, plane) = clean.values().segment(c * plane, plane) +
                                    streak * (1.0f - clean.values().segment(c * plane, plane));

  const double sigma = std::uniform_real_distribution<double>(p.noise_sigma_min, p.noise_sigma_max)(rng);
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Index i = 0; i < out.size(); ++i) out[i] += static_cast<float>(noise(rng));
  }
  out = out.max(0.0f).min(1.0f);
  return Image(clean.shape(), std::move(out));
}

// Dataset -------------------------------------------------------------------------

json DatasetIndex::to_json() const {
  return json{{"ids", ids}, {"train", train}, {"test", test}, {"seed", seed},
              {"params", rain_params_to_json(params)}};
}

std::size_t train_count(std::size_t n, double train_fraction) {
  if (n == 0) return 0;
  if (n == 1) return 1;
  auto k = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

DatasetIndex build_dataset(const fs::path& clean_dir, const fs::path& out_dir,
                           const RainParams& params, bool force) {
  params.validate();
  if (!fs::is_directory(clean_dir)) throw IoError(clean_dir.string() + " is not a directory");
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(clean_dir))
    if (e.is_regular_file() && e.path().extension() == ".png") inputs.push_back(e.path());
  if (inputs.empty()) throw IoError("no PNG files in " + clean_dir.string());
  std::sort(inputs.begin(), inputs.end());

  const bool occupied = fs::exists(out_dir / "manifest.json") || fs::exists(out_dir / "rain") ||
                        fs::exists(out_dir / "gt");
  if (occupied && !force)
    throw IoError(out_dir.string() + " already holds a dataset (use force to overwrite)");
  for (const char* sub : {"rain", "gt", "mask"}) fs::remove_all(out_dir / sub);
  fs::create_directories(out_dir / "rain");
  fs::create_directories(out_dir / "gt");
  if (params.emit_masks) fs::create_directories(out_dir / "mask");

  DatasetIndex index;
  index.seed = params.seed;
  index.params = params;
  for (const auto& path : inputs) {
    const std::string id = path.stem().string();
    std::mt19937_64 rng(stream_seed(params.seed, id));
    const Image clean = load_png(path);
    const Tensor<float> mask = synth_streak_mask(clean.dim(1), clean.dim(2), params, rng);
    save_png(compose_rainy(clean, mask, params, rng), out_dir / "rain" / (id + ".png"));
    fs::copy_file(path, out_dir / "gt" / (id + ".png"), fs::copy_options::overwrite_existing);
    if (params.emit_masks) save_png(mask, out_dir / "mask" / (id + ".png"));
    index.ids.push_back(id);
  }

  std::vector<std::string> order = index.ids;
  std::mt19937_64 split_rng(stream_seed(params.seed, "split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t n_train = train_count(order.size(), params.train_fraction);
  index.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  index.test.assign(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(index.train.begin(), index.train.end());
  std::sort(index.test.begin(), index.test.end());

  std::ofstream(out_dir / "manifest.json") << index.to_json().dump(2) << "\n";
  return index;
}

DatasetIndex load_manifest(const fs::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + root.string());
  json j;
  try {
    in >> j;
    DatasetIndex index;
    index.ids = j.at("ids").get<std::vector<std::string>>();
    index.train = j.at("train").get<std::vector<std::string>>();
    index.test = j.at("test").get<std::vector<std::string>>();
    index.seed = j.at("seed").get<std::uint64_t>();
    RunConfig rc;
    rc.merge(j.at("params"));
    index.params = rc.synth;
    return index;
  } catch (const json::exception& e) {
    throw IoError(root.string() + "/manifest.json: " + e.what());
  }
}

std::vector<ImagePair> load_pairs(const fs::path& root, const std::vector<std::string>& ids) {
  std::vector<ImagePair> pairs;
  for (const auto& id : ids) {
    ImagePair p;
    p.id = id;
    p.clean = load_png(root / "gt" / (id + ".png"));
    p.rain = load_png(root / "rain" / (id + ".png"));
    NDLP_CHECK_SHAPE(p.clean.shape() == p.rain.shape(), "pair ", id, ": clean and rain differ in size");
    if (fs::exists(root / "mask" / (id + ".png"))) {
      const Image m = load_png(root / "mask" / (id + ".png"));
      p.mask = slice(m, 0, 0, 1);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace ndlp
