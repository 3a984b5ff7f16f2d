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
#include <numbers>

#include "ndlp/ops.hpp"

namespace ndlp {

namespace {

template <typename S>
void require_same_shape(const char* op, const Tensor<S>& a, const Tensor<S>& b) {
  NDLP_CHECK_SHAPE(a.shape() == b.shape(), op, ": shape mismatch ", to_string(a.shape()), " vs ",
                   to_string(b.shape()));
}

template <typename S>
constexpr S kGeluCoeff = S(0.044715);

template <typename S>
S gelu_tanh_arg(S x) {
  const S k = std::sqrt(S(2) / std::numbers::pi_v<S>);
  return k * (x + kGeluCoeff<S> * x * x * x);
}

}  // namespace

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  using Array = typename Tensor<S>::Array;
  require_same_shape("add", a, b);
  return make_op<S>("add", a.shape(), a.values() + b.values(), {a, b},
                    [a, b](const Array& g) {
                      accumulate_grad(a, g);
                      accumulate_grad(b, g);
                    });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  using Array = typename Tensor<S>::Array;
  require_same_shape("sub", a, b);
  return make_op<S>("sub", a.shape(), a.values() - b.values(), {a, b},
                    [a, b](const Array& g) {
                      accumulate_grad(a, g);
                      if (b.requires_grad()) accumulate_grad<S>(b, -g);
                    });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  using Array = typename Tensor<S>::Array;
  require_same_shape("mul", a, b);
  return make_op<S>("mul", a.shape(), a.values() * b.values(), {a, b},
                    [a, b](const Array& g) {
                      if (a.requires_grad()) accumulate_grad<S>(a, g * b.values());
                      if (b.requires_grad()) accumulate_grad<S>(b, g * a.values());
                    });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S factor) {
  using Array = typename Tensor<S>::Array;
  return make_op<S>("scale", a.shape(), a.values() * factor, {a},
                    [a, factor](const Array& g) { accumulate_grad<S>(a, g * factor); });
}

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S value) {
  using Array = typename Tensor<S>::Array;
  return make_op<S>("add_scalar", a.shape(), a.values() + value, {a},
                    [a](const Array& g) { accumulate_grad(a, g); });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  using Array = typename Tensor<S>::Array;
  return make_op<S>("relu", a.shape(), a.values().max(S(0)), {a}, [a](const Array& g) {
    // Subgradient at 0 is 0.
    accumulate_grad<S>(a, (a.values() > S(0)).select(g, S(0)));
  });
}

template <typename S>
Tensor<S> gelu(const Tensor<S>& a) {
  using Array = typename Tensor<S>::Array;
  Array out = a.values().unaryExpr(
      [](S x) { return S(0.5) * x * (S(1) + std::tanh(gelu_tanh_arg(x))); });
  return make_op<S>("gelu", a.shape(), std::move(out), {a}, [a](const Array& g) {
    const S k = std::sqrt(S(2) / std::numbers::pi_v<S>);
    Array d = a.values().unaryExpr([k](S x) {
      const S t = std::tanh(gelu_tanh_arg(x));
      return S(0.5) * (S(1) + t) +
             S(0.5) * x * (S(1) - t * t) * k * (S(1) + S(3) * kGeluCoeff<S> * x * x);
    });
    accumulate_grad<S>(a, g * d);
  });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  using Array = typename Tensor<S>::Array;
  Array out = a.values().unaryExpr([](S x) {
    if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
    const S e = std::exp(x);
    return e / (S(1) + e);
  });
  Array y = out;
  return make_op<S>("sigmoid", a.shape(), std::move(out), {a},
                    [a, y](const Array& g) { accumulate_grad<S>(a, g * y * (S(1) - y)); });
}

template <typename S>
Tensor<S> mul_channel(const Tensor<S>& x, const Tensor<S>& a) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "mul_channel: x must be [C,H,W]");
  NDLP_CHECK_SHAPE(a.size() == x.dim(0), "mul_channel: ", a.size(), " factors for ", x.dim(0),
                   " channels");
  const Index c = x.dim(0), plane = x.dim(1) * x.dim(2);
  Array out(x.size());
  for (Index ch = 0; ch < c; ++ch)
    out.segment(ch * plane, plane) = x.values().segment(ch * plane, plane) * a.values()[ch];
  return make_op<S>("mul_channel", x.shape(), std::move(out), {x, a},
                    [x, a, c, plane](const Array& g) {
                      if (x.requires_grad()) {
                        Array gx(x.size());
                        for (Index ch = 0; ch < c; ++ch)
                          gx.segment(ch * plane, plane) =
                              g.segment(ch * plane, plane) * a.values()[ch];
                        accumulate_grad(x, gx);
                      }
                      if (a.requires_grad()) {
                        Array ga(c);
                        for (Index ch = 0; ch < c; ++ch)
                          ga[ch] = (g.segment(ch * plane, plane) *
                                    x.values().segment(ch * plane, plane))
                                       .sum();
                        accumulate_grad(a, ga);
                      }
                    });
}

template <typename S>
Tensor<S> mul_scalar_tensor(const Tensor<S>& x, const Tensor<S>& s) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(s.size() == 1, "mul_scalar_tensor: factor must have one element");
  const S f = s.values()[0];
  return make_op<S>("mul_scalar_tensor", x.shape(), x.values() * f, {x, s},
                    [x, s, f](const Array& g) {
                      if (x.requires_grad()) accumulate_grad<S>(x, g * f);
                      if (s.requires_grad()) {
                        Array gs(1);
                        gs[0] = (g * x.values()).sum();
                        accumulate_grad(s, gs);
                      }
                    });
}

#define NDLP_INSTANTIATE(S)                                                           \
  template Tensor<S> add<S>(const Tensor<S>&, const Tensor<S>&);                      \
  template Tensor<S> sub<S>(const Tensor<S>&, const Tensor<S>&);                      \
  template Tensor<S> mul<S>(const Tensor<S>&, const Tensor<S>&);                      \
  template Tensor<S> scale<S>(const Tensor<S>&, S);                                   \
  template Tensor<S> add_scalar<S>(const Tensor<S>&, S);                              \
  template Tensor<S> relu<S>(const Tensor<S>&);                                       \
  template Tensor<S> gelu<S>(const Tensor<S>&);                                       \
  template Tensor<S> sigmoid<S>(const Tensor<S>&);                                    \
  template Tensor<S> mul_channel<S>(const Tensor<S>&, const Tensor<S>&);              \
  template Tensor<S> mul_scalar_tensor<S>(const Tensor<S>&, const Tensor<S>&);

NDLP_INSTANTIATE(float)
NDLP_INSTANTIATE(double)
#undef NDLP_INSTANTIATE

}  // namespace ndlp
