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

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "fixtures_train.hpp"
#include "ndlp/error.hpp"
#include "ndlp/training.hpp"

using namespace ndlp;
using D = Tensor<double>;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ParameterSet<float> scalar_param(float value, float grad) {
  ParameterSet<float> p;
  Tensor<float> t = p.add("p", {1}, Init::kZeros);
  t.mutable_values()[0] = value;
  t.mutable_grad()[0] = grad;
  return p;
}

}  // namespace

TEST_CASE("l1 loss") {
  CHECK(l1_loss(D::full({4}, 0.3), D::full({4}, 0.3)).item() == 0.0);
  CHECK(l1_loss(D::zeros({2, 3}), D::full({2, 3}, 1.0)).item() == 1.0);
  CHECK(l1_loss(D::from({2}, {0, 0.5}), D::from({2}, {1, 0})).item() == 0.75);
  CHECK_THROWS_AS(l1_loss(D::zeros({2}), D::zeros({3})), ShapeError);

  D pred = D::from({3}, {0.2, 0.5, 0.9});
  pred.set_requires_grad(true);
  Tape<double> tape;
  tape.backward(l1_loss(pred, D::from({3}, {0.5, 0.5, 0.1})));
  CHECK(pred.grad()[0] == doctest::Approx(-1.0 / 3));
  CHECK(pred.grad()[1] == 0.0);
  CHECK(pred.grad()[2] == doctest::Approx(1.0 / 3));
}

TEST_CASE("cosine schedule") {
  const std::int64_t T = 2000;
  CHECK(cosine_lr(0, T, 3e-4, 1e-6) == 3e-4);
  CHECK(cosine_lr(T, T, 3e-4, 1e-6) == 1e-6);
  CHECK(std::abs(cosine_lr(T / 2, T, 3e-4, 1e-6) - 1.505e-4) <= 1e-12);
  double last = 1;
  for (std::int64_t t = 0; t <= T; ++t) {
    const double lr = cosine_lr(t, T, 3e-4, 1e-6);
    CHECK(lr <= last);
    last = lr;
  }
  CHECK_THROWS(cosine_lr(T + 1, T, 3e-4, 1e-6));
  CHECK_THROWS(cosine_lr(0, 0, 3e-4, 1e-6));
}

TEST_CASE("adamw") {
  OptimConfig cfg;
  SUBCASE("zero gradient and decay leave parameters alone") {
    cfg.weight_decay = 0;
    auto p = scalar_param(0.7f, 0.0f);
    auto m = AdamMoments::zeros_like(p);
    adamw_step(p, m, 1, 0.1, cfg);
    CHECK(p.entries()[0].tensor.values()[0] == 0.7f);
  }
  SUBCASE("first step moves by the learning rate") {
    cfg.weight_decay = 0;
    auto p = scalar_param(1.0f, 1.0f);
    auto m = AdamMoments::zeros_like(p);
    adamw_step(p, m, 1, 0.1, cfg);
    CHECK(p.entries()[0].tensor.values()[0] == doctest::Approx(0.9).epsilon(1e-6));
  }
  SUBCASE("decay only") {
    cfg.weight_decay = 0.5;
    auto p = scalar_param(2.0f, 0.0f);
    auto m = AdamMoments::zeros_like(p);
    adamw_step(p, m, 1, 0.1, cfg);
    CHECK(p.entries()[0].tensor.values()[0] == doctest::Approx(2.0 * (1 - 0.1 * 0.5)).epsilon(1e-7));
  }
  SUBCASE("missing or non-finite gradients abort") {
    ParameterSet<float> p;
    p.add("w", {2}, Init::kOnes);
    auto m = AdamMoments::zeros_like(p);
    CHECK_THROWS_AS(adamw_step(p, m, 1, 0.1, cfg), Error);
    Tensor<float> w = p.entries()[0].tensor;
    w.mutable_values().setConstant(1.0f);
    w.mutable_grad()[0] = std::nanf("");
    CHECK_THROWS_AS(adamw_step(p, m, 1, 0.1, cfg), NonFiniteError);
    CHECK(w.values()[0] == 1.0f);
  }
}

TEST_CASE("patch sampling") {
  ImagePair pair;
  pair.id = "ramp";
  pair.clean = Image::zeros({3, 20, 24});
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < 20; ++y)
      for (Index x = 0; x < 24; ++x)
        pair.clean.mutable_values()[(c * 20 + y) * 24 + x] = static_cast<float>(y * 24 + x) / 480;
  pair.rain = pair.clean.clone();

  std::mt19937_64 a(1), b(1);
  for (int i = 0; i < 20; ++i) {
    auto [rain, clean] = sample_patch(pair, 8, true, a);
    auto [rain2, clean2] = sample_patch(pair, 8, true, b);
    CHECK((rain.values() == clean.values()).all());
    CHECK((rain.values() == rain2.values()).all());
    // Each row is a contiguous run of the ramp, possibly reversed.
    const float step = rain.values()[1] - rain.values()[0];
    CHECK(std::abs(std::abs(step) - 1.0f / 480) < 1e-6f);
  }
  std::mt19937_64 rng(2);
  auto [full_rain, full_clean] = sample_patch(pair, 20, false, rng);
  bool found = false;
  for (Index left = 0; left <= 4; ++left)
    found |= (full_clean.values() == crop(pair.clean, 0, left, 20, 20).values()).all();
  CHECK(found);
  Image whole = pair.clean.clone();
  ImagePair square{"sq", crop(whole, 0, 0, 16, 16), crop(whole, 0, 0, 16, 16), {}};
  auto [r, c] = sample_patch(square, 16, false, rng);
  CHECK((r.values() == square.rain.values()).all());
  CHECK_THROWS_AS(sample_patch(pair, 32, false, rng), ShapeError);
}

TEST_CASE("zero iterations persists the initial state") {
  testing::TempDir dir("train");
  RunConfig cfg = testing::tiny_run();
  cfg.optim.iterations = 0;
  TrainState s = TrainState::create(cfg);
  train(s, testing::tiny_dataset(2, 32, 32, 1), dir.path());
  TrainState back = load_state(dir / "final.ndlp");
  CHECK(back.t == 0);
  const auto& a = s.net.parameters().entries();
  const auto& b = back.net.parameters().entries();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].tensor.values() == b[i].tensor.values()).all());
}

TEST_CASE("training writes checkpoints and a log") {
  testing::TempDir dir("train");
  TrainState s = TrainState::create(testing::tiny_run());
  auto rows = train(s, testing::tiny_dataset(3, 32, 32, 2), dir.path());
  CHECK(rows.size() == 12);
  CHECK(fs::exists(dir / "ckpt_000004.ndlp"));
  CHECK(fs::exists(dir / "ckpt_000012.ndlp"));
  CHECK(fs::exists(dir / "final.ndlp"));
  CHECK(slurp(dir / "ckpt_000012.ndlp") == slurp(dir / "final.ndlp"));
  std::istringstream log(slurp(dir / "log.csv"));
  std::string line;
  std::getline(log, line);
  CHECK(line == "iter,lr,l1,psnr_val");
  int n = 0;
  while (std::getline(log, line)) ++n;
  CHECK(n == 12);
  CHECK(rows[3].psnr_val.has_value());
  CHECK_FALSE(rows[4].psnr_val.has_value());
}

TEST_CASE("resume matches an uninterrupted run bit for bit") {
  testing::TempDir dir("resume");
  const Dataset data = testing::tiny_dataset(3, 32, 32, 4);
  RunConfig cfg = testing::tiny_run();
  TrainState full = TrainState::create(cfg);
  train(full, data, dir / "full");

  // Pick up the run from its t=8 checkpoint in a fresh directory.
  TrainState resumed = load_state(dir / "full/ckpt_000008.ndlp");
  CHECK(resumed.t == 8);
  CHECK(resumed.total == 12);
  train(resumed, data, dir / "part");
  CHECK(slurp(dir / "full/final.ndlp") == slurp(dir / "part/final.ndlp"));
}

TEST_CASE("divergence aborts with the last good state") {
  testing::TempDir dir("nan");
  RunConfig cfg = testing::tiny_run();
  cfg.optim.lr_max = 1e30;
  cfg.optim.lr_min = 1e29;
  TrainState s = TrainState::create(cfg);
  CHECK_THROWS_AS(train(s, testing::tiny_dataset(2, 32, 32, 5), dir.path()), NonFiniteError);
  CHECK(fs::exists(dir / "abort.ndlp"));
  TrainState back = load_state(dir / "abort.ndlp");
  CHECK(back.t == s.t);
}
