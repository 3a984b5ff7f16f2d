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

#include "ndlp/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "ndlp/metrics.hpp"

namespace ndlp {

namespace fs = std::filesystem;

template <typename S>
Tensor<S> l1_loss(const Tensor<S>& pred, const Tensor<S>& target) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(pred.shape() == target.shape(), "l1_loss: shape mismatch ",
                   to_string(pred.shape()), " vs ", to_string(target.shape()));
  const Array diff = pred.values() - target.values();
  Array out(1);
  out[0] = diff.abs().sum() / S(diff.size());
  return make_op<S>("l1_loss", {1}, std::move(out), {pred, target},
                    [pred, target, diff](const Array& g) {
                      const S k = g[0] / S(diff.size());
                      Array sign = diff.unaryExpr([](S d) { return S((d > 0) - (d < 0)); });
                      if (pred.requires_grad()) accumulate_grad<S>(pred, sign * k);
                      if (target.requires_grad()) accumulate_grad<S>(target, -sign * k);
                    });
}

template Tensor<float> l1_loss<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> l1_loss<double>(const Tensor<double>&, const Tensor<double>&);

double cosine_lr(std::int64_t t, std::int64_t total, double lr_max, double lr_min) {
  NDLP_CHECK(total > 0, "cosine_lr: total iterations must be positive");
  NDLP_CHECK(t >= 0 && t <= total, "cosine_lr: step ", t, " outside [0, ", total, "]");
  if (t == 0) return lr_max;
  if (t == total) return lr_min;
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

AdamMoments AdamMoments::zeros_like(const ParameterSet<float>& params) {
  AdamMoments m;
  for (const auto& e : params.entries()) {
    m.m.push_back(Tensor<float>::Array::Zero(e.tensor.size()));
    m.v.push_back(Tensor<float>::Array::Zero(e.tensor.size()));
  }
  return m;
}

void adamw_step(ParameterSet<float>& params, AdamMoments& moments, std::int64_t step, double lr,
                const OptimConfig& cfg) {
  NDLP_CHECK(step >= 1, "adamw_step: step is 1-based");
  NDLP_CHECK(moments.m.size() == params.size() && moments.v.size() == params.size(),
             "adamw_step: moments do not match the parameter set");
  for (const auto& e : params.entries()) {
    NDLP_CHECK(e.tensor.has_grad(), "adamw_step: parameter '", e.name, "' has no gradient");
    if (!e.tensor.grad().allFinite())
      throw NonFiniteError("adamw_step: non-finite gradient in '" + e.name + "'");
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<float> p = params.entries()[k].tensor;
    auto& values = p.mutable_values();
    const auto& g = p.grad();
    auto& m = moments.m[k];
    auto& v = moments.v[k];
    for (Index i = 0; i < values.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = (mi / c1) / (std::sqrt(vi / c2) + cfg.eps) + cfg.weight_decay * values[i];
      values[i] = static_cast<float>(values[i] - lr * update);
    }
  }
}

TrainState TrainState::create(const RunConfig& config) {
  config.validate();
  TrainState s{config, Ndlpnet<float>(config.net), {}, 0, config.optim.iterations,
               std::mt19937_64(config.optim.seed)};
  s.net.initialize(s.rng);
  s.moments = AdamMoments::zeros_like(s.net.parameters());
  return s;
}

std::pair<Image, Image> sample_patch(const ImagePair& pair, int patch, bool hflip,
                                     std::mt19937_64& rng) {
  const Index h = pair.rain.dim(1), w = pair.rain.dim(2);
  NDLP_CHECK_SHAPE(pair.clean.shape() == pair.rain.shape(), "sample_patch: pair ", pair.id,
                   " has mismatched extents");
  NDLP_CHECK_SHAPE(h >= patch && w >= patch, "sample_patch: image ", pair.id, " (", h, "x", w,
                   ") smaller than patch ", patch);
  const Index top = std::uniform_int_distribution<Index>(0, h - patch)(rng);
  const Index left = std::uniform_int_distribution<Index>(0, w - patch)(rng);
  const bool flip = hflip && std::uniform_int_distribution<int>(0, 1)(rng) == 1;

  auto cut = [&](const Image& img) {
    Image::Array out(3 * patch * patch);
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < patch; ++y)
        for (Index x = 0; x < patch; ++x) {
          const Index sx = left + (flip ? patch - 1 - x : x);
          out[(c * patch + y) * patch + x] = img.values()[(c * h + top + y) * w + sx];
        }
    return Image({3, patch, patch}, std::move(out));
  };
  return {cut(pair.rain), cut(pair.clean)};
}

Image derain(const Ndlpnet<float>& net, const Image& rain) {
  return net.forward(rain, Mode::kInfer);
}

namespace {

double validation_psnr(const Ndlpnet<float>& net, const std::vector<ImagePair>& test) {
  double total = 0;
  for (const auto& p : test) total += psnr(derain(net, p.rain), p.clean);
  return total / static_cast<double>(test.size());
}

std::string checkpoint_name(std::int64_t t) {
  std::ostringstream os;
  os << "ckpt_" << std::setw(6) << std::setfill('0') << t << ".ndlp";
  return os.str();
}

}  // namespace

std::vector<LogRow> train(TrainState& state, const Dataset& data, const fs::path& out_dir,
                          std::ostream* progress) {
  NDLP_CHECK(!data.train.empty(), "train: no training pairs");
  const OptimConfig& oc = state.config.optim;
  fs::create_directories(out_dir);

  const fs::path log_path = out_dir / "log.csv";
  const bool append = state.t > 0 && fs::exists(log_path);
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  if (!append) log << "iter,lr,l1,psnr_val\n";
  log << std::setprecision(9);

  std::vector<LogRow> rows;
  auto& params = state.net.parameters();
  while (state.t < state.total) {
    LogRow row;
    row.lr = cosine_lr(state.t, state.total, oc.lr_max, oc.lr_min);
    try {
      Tape<float> tape;
      Tensor<float> loss;
      for (int b = 0; b < oc.batch; ++b) {
        const auto pick = std::uniform_int_distribution<std::size_t>(0, data.train.size() - 1)(state.rng);
        auto [rain, clean] = sample_patch(data.train[pick], oc.patch, oc.hflip, state.rng);
        Tensor<float> l = l1_loss(state.net.forward(rain, Mode::kTrain), clean);
        loss = loss.defined() ? add(loss, l) : l;
      }
      loss = scale(loss, 1.0f / static_cast<float>(oc.batch));
      row.l1 = loss.item();
      tape.backward(loss);
      adamw_step(params, state.moments, state.t + 1, row.lr, oc);
      params.zero_grad();
    } catch (const NonFiniteError& e) {
      params.zero_grad();
      save_state(state, out_dir / "abort.ndlp");
      throw NonFiniteError("iteration " + std::to_string(state.t + 1) + ": " + e.what() +
                           " (last good state saved to abort.ndlp)");
    }
    ++state.t;
    row.iter = state.t;

    if (state.t % oc.checkpoint_every == 0 || state.t == state.total) {
      if (!data.test.empty()) row.psnr_val = validation_psnr(state.net, data.test);
      if (state.t % oc.checkpoint_every == 0) save_state(state, out_dir / checkpoint_name(state.t));
    }
    log << row.iter << "," << row.lr << "," << row.l1 << ",";
    if (row.psnr_val) log << *row.psnr_val;
    log << "\n";
    if (progress && (state.t % oc.checkpoint_every == 0 || state.t == state.total)) {
      *progress << "iter " << row.iter << "/" << state.total << " lr " << row.lr << " l1 " << row.l1;
      if (row.psnr_val) *progress << " psnr_val " << *row.psnr_val;
      *progress << std::endl;
    }
    rows.push_back(row);
  }
  log.flush();
  save_state(state, out_dir / "final.ndlp");
  return rows;
}

}  // namespace ndlp
