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

#include <algorithm>
#include <cmath>

#include "ndlp/ops.hpp"

namespace ndlp {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// outer x axis x inner view of a tensor around one axis.
struct AxisView {
  Index outer = 1, extent = 1, inner = 1;
};

template <typename S>
AxisView view_around(const Tensor<S>& x, int axis) {
  const int r = x.rank();
  if (axis < 0) axis += r;
  NDLP_CHECK_SHAPE(axis >= 0 && axis < r, "axis ", axis, " out of range for rank ", r);
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= x.shape()[i];
  v.extent = x.shape()[axis];
  for (int i = axis + 1; i < r; ++i) v.inner *= x.shape()[i];
  return v;
}

constexpr double kLayerNormEps = 1e-6;
constexpr double kNormalizeEps = 1e-12;

}  // namespace

template <typename S>
Tensor<S> softmax(const Tensor<S>& x, int axis) {
  using Array = typename Tensor<S>::Array;
  const AxisView v = view_around(x, axis);
  NDLP_CHECK_SHAPE(v.extent > 0, "softmax: empty axis");
  Array y(x.size());
  const S* xv = x.values().data();
  for (Index o = 0; o < v.outer; ++o) {
    for (Index in = 0; in < v.inner; ++in) {
      const Index base = o * v.extent * v.inner + in;
      S mx = xv[base];
      for (Index k = 1; k < v.extent; ++k) mx = std::max(mx, xv[base + k * v.inner]);
      S total = 0;
      for (Index k = 0; k < v.extent; ++k) {
        const S e = std::exp(xv[base + k * v.inner] - mx);
        y[base + k * v.inner] = e;
        total += e;
      }
      for (Index k = 0; k < v.extent; ++k) y[base + k * v.inner] /= total;
    }
  }
  Array yc = y;
  return make_op<S>("softmax", x.shape(), std::move(y), {x}, [x, yc, v](const Array& g) {
    Array gx(x.size());
    for (Index o = 0; o < v.outer; ++o) {
      for (Index in = 0; in < v.inner; ++in) {
        const Index base = o * v.extent * v.inner + in;
        S dot = 0;
        for (Index k = 0; k < v.extent; ++k) dot += g[base + k * v.inner] * yc[base + k * v.inner];
        for (Index k = 0; k < v.extent; ++k) {
          const Index i = base + k * v.inner;
          gx[i] = yc[i] * (g[i] - dot);
        }
      }
    }
    accumulate_grad(x, gx);
  });
}

template <typename S>
Tensor<S> layer_norm_channels(const Tensor<S>& x, const Tensor<S>& gamma) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "layer_norm_channels: input must be [C,H,W]");
  NDLP_CHECK_SHAPE(gamma.size() == x.dim(0), "layer_norm_channels: gamma has ", gamma.size(),
                   " entries for ", x.dim(0), " channels");
  const Index c = x.dim(0), p = x.dim(1) * x.dim(2);
  Eigen::Map<const RowMat<S>> xm(x.values().data(), c, p);

  // Column-wise statistics: one column per pixel.
  Eigen::Array<S, 1, Eigen::Dynamic> mu = xm.colwise().mean().array();
  RowMat<S> centered = xm.rowwise() - mu.matrix();
  Eigen::Array<S, 1, Eigen::Dynamic> var = centered.array().square().colwise().sum() / S(c);
  Eigen::Array<S, 1, Eigen::Dynamic> inv_std = (var + S(kLayerNormEps)).rsqrt();
  auto xhat = std::make_shared<RowMat<S>>(centered.array().rowwise() * inv_std);

  Array out(x.size());
  Eigen::Map<RowMat<S>> om(out.data(), c, p);
  om = xhat->array().colwise() * gamma.values();

  return make_op<S>(
      "layer_norm_channels", x.shape(), std::move(out), {x, gamma},
      [x, gamma, xhat, inv_std, c, p](const Array& g) {
        Eigen::Map<const RowMat<S>> gm(g.data(), c, p);
        if (gamma.requires_grad()) {
          Array gg = (gm.array() * xhat->array()).rowwise().sum();
          accumulate_grad(gamma, gg);
        }
        if (x.requires_grad()) {
          RowMat<S> gxhat = (gm.array().colwise() * gamma.values()).matrix();
          Eigen::Array<S, 1, Eigen::Dynamic> mean_g = gxhat.colwise().mean().array();
          Eigen::Array<S, 1, Eigen::Dynamic> mean_gx =
              (gxhat.array() * xhat->array()).colwise().sum() / S(c);
          Array gx(x.size());
          Eigen::Map<RowMat<S>> gxm(gx.data(), c, p);
          gxm = ((gxhat.array().rowwise() - mean_g) - xhat->array().rowwise() * mean_gx)
                    .rowwise() *
                inv_std;
          accumulate_grad(x, gx);
        }
      });
}

template <typename S>
Tensor<S> global_avg_pool(const Tensor<S>& x) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "global_avg_pool: input must be [C,H,W]");
  const Index c = x.dim(0), p = x.dim(1) * x.dim(2);
  Eigen::Map<const RowMat<S>> xm(x.values().data(), c, p);
  Array out = xm.rowwise().mean().array();
  return make_op<S>("global_avg_pool", {c}, std::move(out), {x}, [x, c, p](const Array& g) {
    Array gx(x.size());
    for (Index ch = 0; ch < c; ++ch) gx.segment(ch * p, p).setConstant(g[ch] / S(p));
    accumulate_grad(x, gx);
  });
}

template <typename S>
Tensor<S> l2_normalize_rows(const Tensor<S>& x) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 2, "l2_normalize_rows: input must be rank 2");
  const Index m = x.dim(0), n = x.dim(1);
  Eigen::Map<const RowMat<S>> xm(x.values().data(), m, n);
  Eigen::Array<S, Eigen::Dynamic, 1> norms =
      xm.rowwise().norm().array().max(S(kNormalizeEps));
  Array out(x.size());
  Eigen::Map<RowMat<S>> om(out.data(), m, n);
  om = xm.array().colwise() / norms;
  Array y = out;
  return make_op<S>("l2_normalize_rows", x.shape(), std::move(out), {x},
                    [x, y, norms, m, n](const Array& g) {
                      Eigen::Map<const RowMat<S>> gm(g.data(), m, n);
                      Eigen::Map<const RowMat<S>> ym(y.data(), m, n);
                      Array gx(x.size());
                      Eigen::Map<RowMat<S>> gxm(gx.data(), m, n);
                      for (Index i = 0; i < m; ++i) {
                        if (norms[i] <= S(kNormalizeEps)) {
                          // Clamped norm: the map is linear in x there.
                          gxm.row(i) = gm.row(i) / norms[i];
                        } else {
                          const S dot = gm.row(i).dot(ym.row(i));
                          gxm.row(i) = (gm.row(i) - ym.row(i) * dot) / norms[i];
                        }
                      }
                      accumulate_grad(x, gx);
                    });
}

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(a.rank() == 2 && b.rank() == 2, "matmul: operands must be rank 2");
  NDLP_CHECK_SHAPE(a.dim(1) == b.dim(0), "matmul: inner extents ", a.dim(1), " and ", b.dim(0),
                   " differ");
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Eigen::Map<const RowMat<S>> am(a.values().data(), m, k);
  Eigen::Map<const RowMat<S>> bm(b.values().data(), k, n);
  Array out(m * n);
  Eigen::Map<RowMat<S>> om(out.data(), m, n);
  om.noalias() = am * bm;
  return make_op<S>("matmul", {m, n}, std::move(out), {a, b}, [a, b, m, k, n](const Array& g) {
    Eigen::Map<const RowMat<S>> gm(g.data(), m, n);
    if (a.requires_grad()) {
      Eigen::Map<const RowMat<S>> bm(b.values().data(), k, n);
      Array ga(m * k);
      Eigen::Map<RowMat<S>>(ga.data(), m, k).noalias() = gm * bm.transpose();
      accumulate_grad(a, ga);
    }
    if (b.requires_grad()) {
      Eigen::Map<const RowMat<S>> am(a.values().data(), m, k);
      Array gb(k * n);
      Eigen::Map<RowMat<S>>(gb.data(), k, n).noalias() = am.transpose() * gm;
      accumulate_grad(b, gb);
    }
  });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  using Array = typename Tensor<S>::Array;
  Array out(1);
  out[0] = x.values().sum();
  return make_op<S>("sum", {1}, std::move(out), {x}, [x](const Array& g) {
    accumulate_grad<S>(x, Array::Constant(x.size(), g[0]));
  });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  return scale(sum(x), S(1) / S(x.size()));
}

#define NDLP_INSTANTIATE(S)                                                      \
  template Tensor<S> softmax<S>(const Tensor<S>&, int);                          \
  template Tensor<S> layer_norm_channels<S>(const Tensor<S>&, const Tensor<S>&); \
  template Tensor<S> global_avg_pool<S>(const Tensor<S>&);                       \
  template Tensor<S> l2_normalize_rows<S>(const Tensor<S>&);                     \
  template Tensor<S> matmul<S>(const Tensor<S>&, const Tensor<S>&);              \
  template Tensor<S> sum<S>(const Tensor<S>&);                                   \
  template Tensor<S> mean<S>(const Tensor<S>&);

NDLP_INSTANTIATE(float)
NDLP_INSTANTIATE(double)
#undef NDLP_INSTANTIATE

}  // namespace ndlp
