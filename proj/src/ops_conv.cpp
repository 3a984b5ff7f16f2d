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

#include <memory>

#include "ndlp/ops.hpp"

namespace ndlp {

Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  Index cin, h, w, kh, kw, stride, pad, ho, wo;
  PadMode mode;

  Index rows() const { return cin * kh * kw; }
  Index cols() const { return ho * wo; }

  // Source pixel for an output location and tap, or -1 for a zero pad.
  Index source(Index ih, Index iw) const {
    if (ih < 0 || ih >= h || iw < 0 || iw >= w) {
      if (mode == PadMode::kZero) return -1;
      ih = reflect_index(ih, h);
      iw = reflect_index(iw, w);
    }
    return ih * w + iw;
  }
};

template <typename S>
void im2col(const S* x, const ConvGeometry& g, RowMat<S>& cols) {
  cols.resize(g.rows(), g.cols());
  for (Index ci = 0; ci < g.cin; ++ci) {
    const S* plane = x + ci * g.h * g.w;
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        S* row = cols.row((ci * g.kh + ki) * g.kw + kj).data();
        for (Index oh = 0; oh < g.ho; ++oh) {
          const Index ih = oh * g.stride - g.pad + ki;
          for (Index ow = 0; ow < g.wo; ++ow) {
            const Index src = g.source(ih, ow * g.stride - g.pad + kj);
            row[oh * g.wo + ow] = src < 0 ? S(0) : plane[src];
          }
        }
      }
    }
  }
}

template <typename S>
void col2im(const RowMat<S>& cols, const ConvGeometry& g, S* gx) {
  for (Index ci = 0; ci < g.cin; ++ci) {
    S* plane = gx + ci * g.h * g.w;
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        const S* row = cols.row((ci * g.kh + ki) * g.kw + kj).data();
        for (Index oh = 0; oh < g.ho; ++oh) {
          const Index ih = oh * g.stride - g.pad + ki;
          for (Index ow = 0; ow < g.wo; ++ow) {
            const Index src = g.source(ih, ow * g.stride - g.pad + kj);
            if (src >= 0) plane[src] += row[oh * g.wo + ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias, Index stride,
                 Padding padding) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "conv2d: input must be [C,H,W], got ", to_string(x.shape()));
  NDLP_CHECK_SHAPE(w.rank() == 4, "conv2d: weight must be [Cout,Cin,kh,kw]");
  NDLP_CHECK_SHAPE(w.dim(1) == x.dim(0), "conv2d: weight expects ", w.dim(1),
                   " input channels, input has ", x.dim(0));
  NDLP_CHECK_SHAPE(w.dim(2) % 2 == 1 && w.dim(3) % 2 == 1, "conv2d: kernel extents must be odd");
  NDLP_CHECK(stride >= 1, "conv2d: stride must be >= 1");
  NDLP_CHECK(padding.size >= 0, "conv2d: negative padding");
  if (bias.defined())
    NDLP_CHECK_SHAPE(bias.size() == w.dim(0), "conv2d: bias must have Cout elements");

  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), w.dim(2), w.dim(3), stride, padding.size, 0, 0,
                 padding.mode};
  const Index span_h = g.h + 2 * g.pad - g.kh;
  const Index span_w = g.w + 2 * g.pad - g.kw;
  NDLP_CHECK_SHAPE(span_h >= 0 && span_w >= 0, "conv2d: non-positive output extent for input ",
                   to_string(x.shape()), " and kernel ", to_string(w.shape()));
  g.ho = span_h / stride + 1;
  g.wo = span_w / stride + 1;
  const Index cout = w.dim(0);
  const bool pointwise = g.kh == 1 && g.kw == 1 && stride == 1 && g.pad == 0;

  auto cols = std::make_shared<RowMat<S>>();
  if (!pointwise) im2col(x.values().data(), g, *cols);

  Eigen::Map<const RowMat<S>> xin(x.values().data(), g.cin, g.h * g.w);
  Eigen::Map<const RowMat<S>> wm(w.values().data(), cout, g.rows());
  Array out(cout * g.cols());
  Eigen::Map<RowMat<S>> om(out.data(), cout, g.cols());
  if (pointwise) {
    om.noalias() = wm * xin;
  } else {
    om.noalias() = wm * *cols;
  }
  if (bias.defined()) om.colwise() += bias.values().matrix();

  const bool rec = will_record<S>(std::vector<Tensor<S>>{x, w, bias});
  if (!rec) cols.reset();
  return make_op<S>(
      "conv2d", {cout, g.ho, g.wo}, std::move(out), {x, w, bias},
      [x, w, bias, g, cols, pointwise, cout](const Array& gout) {
        Eigen::Map<const RowMat<S>> gm(gout.data(), cout, g.cols());
        Eigen::Map<const RowMat<S>> xin(x.values().data(), g.cin, g.h * g.w);
        if (w.requires_grad()) {
          Array gw(w.size());
          Eigen::Map<RowMat<S>> gwm(gw.data(), cout, g.rows());
          if (pointwise) {
            gwm.noalias() = gm * xin.transpose();
          } else {
            gwm.noalias() = gm * cols->transpose();
          }
          accumulate_grad(w, gw);
        }
        if (bias.defined() && bias.requires_grad()) {
          Array gb = gm.rowwise().sum().array();
          accumulate_grad(bias, gb);
        }
        if (x.requires_grad()) {
          Eigen::Map<const RowMat<S>> wm(w.values().data(), cout, g.rows());
          Array gx = Array::Zero(x.size());
          if (pointwise) {
            Eigen::Map<RowMat<S>> gxm(gx.data(), g.cin, g.h * g.w);
            gxm.noalias() = wm.transpose() * gm;
          } else {
            RowMat<S> gcols = wm.transpose() * gm;
            col2im(gcols, g, gx.data());
          }
          accumulate_grad(x, gx);
        }
      });
}

template <typename S>
Tensor<S> depthwise_conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "depthwise_conv2d: input must be [C,H,W]");
  NDLP_CHECK_SHAPE(w.rank() == 4 && w.dim(1) == 1, "depthwise_conv2d: weight must be [C,1,k,k]");
  NDLP_CHECK_SHAPE(w.dim(0) == x.dim(0), "depthwise_conv2d: ", w.dim(0), " kernels for ",
                   x.dim(0), " channels");
  NDLP_CHECK_SHAPE(w.dim(2) == w.dim(3) && w.dim(2) % 2 == 1,
                   "depthwise_conv2d: kernel must be square and odd");
  if (bias.defined()) NDLP_CHECK_SHAPE(bias.size() == x.dim(0), "depthwise_conv2d: bias size");

  const Index c = x.dim(0), h = x.dim(1), wd = x.dim(2), k = w.dim(2), p = k / 2;
  const S* xv = x.values().data();
  const S* wv = w.values().data();
  Array out(x.size());
  for (Index ch = 0; ch < c; ++ch) {
    const S* in = xv + ch * h * wd;
    const S* ker = wv + ch * k * k;
    S* o = out.data() + ch * h * wd;
    const S b = bias.defined() ? bias.values()[ch] : S(0);
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < wd; ++j) {
        S acc = b;
        for (Index ki = 0; ki < k; ++ki) {
          const Index ii = i + ki - p;
          if (ii < 0 || ii >= h) continue;
          for (Index kj = 0; kj < k; ++kj) {
            const Index jj = j + kj - p;
            if (jj < 0 || jj >= wd) continue;
            acc += ker[ki * k + kj] * in[ii * wd + jj];
          }
        }
        o[i * wd + j] = acc;
      }
    }
  }

  return make_op<S>(
      "depthwise_conv2d", x.shape(), std::move(out), {x, w, bias},
      [x, w, bias, c, h, wd, k, p](const Array& gout) {
        const bool need_x = x.requires_grad();
        const bool need_w = w.requires_grad();
        Array gx = need_x ? Array::Zero(x.size()) : Array();
        Array gw = need_w ? Array::Zero(w.size()) : Array();
        Array gb = Array::Zero(c);
        const S* xv = x.values().data();
        const S* wv = w.values().data();
        for (Index ch = 0; ch < c; ++ch) {
          const S* in = xv + ch * h * wd;
          const S* ker = wv + ch * k * k;
          const S* go = gout.data() + ch * h * wd;
          for (Index i = 0; i < h; ++i) {
            for (Index j = 0; j < wd; ++j) {
              const S gij = go[i * wd + j];
              gb[ch] += gij;
              for (Index ki = 0; ki < k; ++ki) {
                const Index ii = i + ki - p;
                if (ii < 0 || ii >= h) continue;
                for (Index kj = 0; kj < k; ++kj) {
                  const Index jj = j + kj - p;
                  if (jj < 0 || jj >= wd) continue;
                  if (need_w) gw[ch * k * k + ki * k + kj] += gij * in[ii * wd + jj];
                  if (need_x) gx[ch * h * wd + ii * wd + jj] += gij * ker[ki * k + kj];
                }
              }
            }
          }
        }
        if (need_x) accumulate_grad(x, gx);
        if (need_w) accumulate_grad(w, gw);
        if (bias.defined()) accumulate_grad(bias, gb);
      });
}

#define NDLP_INSTANTIATE(S)                                                                  \
  template Tensor<S> conv2d<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, Index, \
                               Padding);                                                     \
  template Tensor<S> depthwise_conv2d<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);

NDLP_INSTANTIATE(float)
NDLP_INSTANTIATE(double)
#undef NDLP_INSTANTIATE

}  // namespace ndlp
