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

#include "ndlp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "ndlp/net.hpp"
#include "ndlp/ops.hpp"
#include "ndlp/training.hpp"

namespace ndlp {

using T = Tensor<double>;

GradCheckReport grad_check(const GradFn& fn, const std::vector<T>& inputs,
                           const std::vector<std::string>& names, double tolerance, double step,
                           Index max_checks_per_input) {
  NDLP_CHECK(names.size() == inputs.size(), "grad_check: one name per input");
  std::optional<T> projection;
  auto reduce = [&](const T& out) {
    if (out.size() == 1) return sum(out);
    if (!projection) {
      std::mt19937_64 rng(0x5eed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      T::Array r(out.size());
      for (Index i = 0; i < r.size(); ++i) r[i] = u(rng);
      projection = T(out.shape(), std::move(r));
    }
    return sum(mul(out, *projection));
  };

  for (auto t : inputs)
    if (t.requires_grad()) t.zero_grad();
  {
    Tape<double> tape;
    tape.backward(reduce(fn(inputs)));
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  NoGradScope<double> no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    T input = inputs[k];
    if (!input.requires_grad()) continue;
    const T::Array analytic = input.has_grad() ? input.grad() : T::Array::Zero(input.size());
    const Index n = input.size();
    const Index stride =
        max_checks_per_input > 0 ? std::max<Index>(1, n / max_checks_per_input) : 1;
    double worst = 0;
    for (Index i = 0; i < n; i += stride) {
      auto& v = input.mutable_values();
      const double saved = v[i];
      v[i] = saved + step;
      const double plus = reduce(fn(inputs)).item();
      v[i] = saved - step;
      const double minus = reduce(fn(inputs)).item();
      v[i] = saved;
      const double numeric = (plus - minus) / (2 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    report.names.push_back(names[k]);
    report.max_rel_error.push_back(worst);
    report.worst = std::max(report.worst, worst);
  }
  report.passed = report.worst < tolerance;
  return report;
}

// Registered suite ---------------------------------------------------------------

namespace {

class Suite {
 public:
  Suite(std::uint64_t seed, double tol) : rng_(seed), tol_(tol) {}

  T random(Shape shape, double lo = -1.0, double hi = 1.0, bool grad = true) {
    std::uniform_real_distribution<double> u(lo, hi);
    T::Array v(numel(shape));
    for (Index i = 0; i < v.size(); ++i) v[i] = u(rng_);
    return T(std::move(shape), std::move(v), grad);
  }

  void check(const std::string& op, const std::string& shape, const GradFn& fn,
             const std::vector<T>& inputs, const std::vector<std::string>& names,
             Index max_checks = 0) {
    cases_.push_back({op, shape, grad_check(fn, inputs, names, tol_, kGradCheckStep, max_checks)});
  }

  // Checks every parameter of `params` (subsampled) plus any extra inputs.
  void check_params(const std::string& op, const std::string& shape, const GradFn& fn,
                    std::vector<T> inputs, std::vector<std::string> names,
                    ParameterSet<double>& params, Index max_checks) {
    std::mt19937_64 init(rng_());
    params.initialize(init);
    // Perturb the ones/zeros initializations so no gradient is trivially symmetric.
    for (const auto& e : params.entries()) {
      T t = e.tensor;
      for (Index i = 0; i < t.size(); ++i)
        t.mutable_values()[i] += std::uniform_real_distribution<double>(-0.2, 0.2)(rng_);
      inputs.push_back(t);
      names.push_back(e.name);
    }
    check(op, shape, fn, inputs, names, max_checks);
  }

  std::mt19937_64& rng() { return rng_; }
  std::vector<GradCheckCase> take() { return std::move(cases_); }

 private:
  std::mt19937_64 rng_;
  double tol_;
  std::vector<GradCheckCase> cases_;
};

NetConfig tiny_config() {
  NetConfig c;
  c.base_dim = 4;
  c.max_dim = 32;
  c.blocks_per_level = {1, 1, 1, 1};
  c.heads_per_level = {1, 2, 2, 2};
  c.rlp_stages = 2;
  c.rlp_channels = 4;
  c.rlp_res_blocks = 1;
  c.spc_feats = {4, 4, 2};
  c.eca_reduction = 2;
  return c;
}

void primitive_cases(Suite& s) {
  // conv2d: zero padding, pointwise, strided reflect padding.
  {
    struct Cfg { Shape x, w; Index stride; Padding pad; };
    for (const Cfg& c : {Cfg{{2, 4, 4}, {3, 2, 3, 3}, 1, Padding::zero(1)},
                         Cfg{{3, 5, 6}, {2, 3, 1, 1}, 1, Padding::zero(0)},
                         Cfg{{2, 6, 5}, {2, 2, 3, 3}, 2, Padding::reflect(1)}}) {
      T x = s.random(c.x), w = s.random(c.w), b = s.random({c.w[0]});
      s.check("conv2d", to_string(c.x) + "*" + to_string(c.w),
              [c](const std::vector<T>& in) { return conv2d(in[0], in[1], in[2], c.stride, c.pad); },
              {x, w, b}, {"x", "w", "b"});
    }
  }
  for (Shape shape : {Shape{2, 4, 4}, Shape{3, 5, 3}, Shape{1, 6, 6}}) {
    T x = s.random(shape), w = s.random({shape[0], 1, 3, 3}), b = s.random({shape[0]});
    s.check("depthwise_conv2d", to_string(shape),
            [](const std::vector<T>& in) { return depthwise_conv2d(in[0], in[1], in[2]); },
            {x, w, b}, {"x", "w", "b"});
  }

  const std::vector<Shape> shapes = {{5}, {2, 3, 4}, {3, 3, 3}};
  using Binary = T (*)(const T&, const T&);
  for (auto [name, f] : {std::pair<const char*, Binary>{"add", &add<double>},
                         std::pair<const char*, Binary>{"sub", &sub<double>},
                         std::pair<const char*, Binary>{"mul", &mul<double>}}) {
    for (const auto& shape : shapes) {
      T a = s.random(shape), b = s.random(shape);
      s.check(name, to_string(shape), [f](const std::vector<T>& in) { return f(in[0], in[1]); },
              {a, b}, {"a", "b"});
    }
  }
  using Unary = T (*)(const T&);
  for (auto [name, f] : {std::pair<const char*, Unary>{"relu", &relu<double>},
                         std::pair<const char*, Unary>{"gelu", &gelu<double>},
                         std::pair<const char*, Unary>{"sigmoid", &sigmoid<double>},
                         std::pair<const char*, Unary>{"global_avg_pool", &global_avg_pool<double>},
                         std::pair<const char*, Unary>{"sum", &sum<double>},
                         std::pair<const char*, Unary>{"mean", &mean<double>}}) {
    for (const auto& shape : {Shape{2, 3, 4}, Shape{3, 3, 3}, Shape{1, 5, 2}}) {
      T a = s.random(shape);
      s.check(name, to_string(shape), [f](const std::vector<T>& in) { return f(in[0]); }, {a},
              {"x"});
    }
  }
  for (const auto& shape : shapes) {
    T a = s.random(shape);
    s.check("scale", to_string(shape),
            [](const std::vector<T>& in) { return scale(in[0], -1.7); }, {a}, {"x"});
    s.check("add_scalar", to_string(shape),
            [](const std::vector<T>& in) { return add_scalar(in[0], 0.3); }, {a}, {"x"});
    T f = s.random({1});
    s.check("mul_scalar_tensor", to_string(shape),
            [](const std::vector<T>& in) { return mul_scalar_tensor(in[0], in[1]); }, {a, f},
            {"x", "s"});
  }
  for (const auto& shape : {Shape{2, 3, 4}, Shape{4, 2, 2}, Shape{3, 1, 5}}) {
    T x = s.random(shape), a = s.random({shape[0]});
    s.check("mul_channel", to_string(shape),
            [](const std::vector<T>& in) { return mul_channel(in[0], in[1]); }, {x, a}, {"x", "a"});
    T gamma = s.random({shape[0]});
    s.check("layer_norm_channels", to_string(shape),
            [](const std::vector<T>& in) { return layer_norm_channels(in[0], in[1]); }, {x, gamma},
            {"x", "gamma"});
  }
  for (auto [shape, axis] : {std::pair{Shape{7}, 0}, std::pair{Shape{3, 4}, 1},
                             std::pair{Shape{2, 3, 4}, 1}}) {
    T x = s.random(shape);
    s.check("softmax", to_string(shape) + "@" + std::to_string(axis),
            [axis](const std::vector<T>& in) { return softmax(in[0], axis); }, {x}, {"x"});
  }
  for (const auto& shape : {Shape{3, 4}, Shape{1, 6}, Shape{4, 2}}) {
    T x = s.random(shape);
    s.check("l2_normalize_rows", to_string(shape),
            [](const std::vector<T>& in) { return l2_normalize_rows(in[0]); }, {x}, {"x"});
    s.check("transpose", to_string(shape),
            [](const std::vector<T>& in) { return transpose(in[0]); }, {x}, {"x"});
  }
  for (auto [m, k, n] : {std::tuple{2, 3, 4}, std::tuple{1, 5, 1}, std::tuple{4, 4, 3}}) {
    T a = s.random({m, k}), b = s.random({k, n});
    s.check("matmul", std::to_string(m) + "x" + std::to_string(k) + "*" + std::to_string(n),
            [](const std::vector<T>& in) { return matmul(in[0], in[1]); }, {a, b}, {"a", "b"});
  }
  for (auto [shape, r] : {std::pair{Shape{2, 4, 4}, Index{2}}, std::pair{Shape{1, 4, 8}, Index{4}},
                          std::pair{Shape{3, 3, 3}, Index{1}}}) {
    T x = s.random(shape);
    s.check("pixel_unshuffle", to_string(shape),
            [r](const std::vector<T>& in) { return pixel_unshuffle(in[0], r); }, {x}, {"x"});
    T y = s.random({shape[0] * r * r, shape[1], shape[2]});
    s.check("pixel_shuffle", to_string(y.shape()),
            [r](const std::vector<T>& in) { return pixel_shuffle(in[0], r); }, {y}, {"x"});
  }
  for (int axis : {0, 1, 2}) {
    Shape sa{2, 3, 4}, sb{2, 3, 4};
    sb[axis] = 1;
    T a = s.random(sa), b = s.random(sb);
    s.check("concat", "axis " + std::to_string(axis),
            [axis](const std::vector<T>& in) { return concat<double>({in[0], in[1], in[0]}, axis); },
            {a, b}, {"a", "b"});
    s.check("slice", "axis " + std::to_string(axis),
            [axis](const std::vector<T>& in) { return slice(in[0], axis, 1, 2); }, {a}, {"x"});
  }
  for (const auto& shape : {Shape{2, 3, 4}, Shape{3, 5, 5}, Shape{1, 4, 3}}) {
    T x = s.random(shape);
    s.check("reshape", to_string(shape),
            [](const std::vector<T>& in) { return reshape(in[0], {in[0].size()}); }, {x}, {"x"});
    s.check("pad_reflect", to_string(shape),
            [](const std::vector<T>& in) { return pad_reflect(in[0], 1, 2, 3, 1); }, {x}, {"x"});
    s.check("crop", to_string(shape),
            [](const std::vector<T>& in) { return crop(in[0], 1, 1, in[0].dim(1) - 1, 2); }, {x},
            {"x"});
    T target = s.random(shape);
    s.check("l1_loss", to_string(shape),
            [](const std::vector<T>& in) { return l1_loss(in[0], in[1]); }, {x, target},
            {"pred", "target"});
  }
}

void block_cases(Suite& s) {
  const NetConfig tiny = tiny_config();
  for (Index side : {4, 5, 6}) {
    const std::string shape = std::to_string(side) + "x" + std::to_string(side);
    {
      ParameterSet<double> p;
      auto w = register_rlp(tiny, p);
      T image = s.random({3, side, side}, 0.0, 1.0, false);
      s.check_params("rlp_forward", shape,
                     [w, image](const std::vector<T>&) { return rlp_forward(image, 2, w); }, {},
                     {}, p, 6);
    }
    {
      NetConfig cfg = tiny;
      cfg.spc_prior_grad = true;
      cfg.z_scale = 3.0;
      T prior = s.random({1, side, side}, 0.0, 1.0);
      s.check("spc_encode", shape,
              [cfg, side](const std::vector<T>& in) { return spc_encode(side, side, in[0], cfg); },
              {prior}, {"prior"});
    }
    {
      ParameterSet<double> p;
      auto w = register_eca<double>("eca", 8, 4, p);
      T x = s.random({8, side, side});
      s.check_params("eca_forward", shape,
                     [w](const std::vector<T>& in) { return eca_forward(in[0], w); }, {x}, {"x"}, p,
                     8);
    }
    {
      ParameterSet<double> p;
      PpmWeights<double> w{register_eca<double>("ppm.eca", 14, 2, p), {}};
      w.fuse.weight = p.add("ppm.fuse.weight", {4, 14, 1, 1}, Init::kKaiming);
      w.fuse.bias = p.add("ppm.fuse.bias", {4}, Init::kZeros);
      T x = s.random({4, side, side});
      T prior = s.random({1, side, side}, 0.0, 1.0, false);
      s.check_params("ppm_forward", shape,
                     [w, prior, tiny](const std::vector<T>& in) {
                       return ppm_forward(in[0], prior, tiny, &w);
                     },
                     {x}, {"x"}, p, 8);
    }
    {
      ParameterSet<double> p;
      auto w = register_mdta<double>("attn", 4, 2, p);
      T x = s.random({4, side, side});
      s.check_params("mdta_forward", shape,
                     [w](const std::vector<T>& in) { return mdta_forward(in[0], w); }, {x}, {"x"},
                     p, 8);
    }
    {
      ParameterSet<double> p;
      auto w = register_gdfn<double>("ffn", 4, 2.0, p);
      T x = s.random({4, side, side});
      s.check_params("gdfn_forward", shape,
                     [w](const std::vector<T>& in) { return gdfn_forward(in[0], w); }, {x}, {"x"},
                     p, 8);
    }
  }
  NetConfig full = tiny;
  full.spc_prior_grad = true;
  for (Index side : {8, 12, 16}) {
    ParameterSet<double> p;
    auto w = register_net(full, p);
    T image = s.random({3, side, side}, 0.05, 0.95, false);
    s.check_params("net_forward", std::to_string(side) + "x" + std::to_string(side),
                   [w, image, full](const std::vector<T>&) { return net_forward(image, full, w); },
                   {}, {}, p, 4);
  }
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed, double tolerance) {
  Suite suite(seed, tolerance);
  primitive_cases(suite);
  block_cases(suite);
  return suite.take();
}

}  // namespace ndlp
