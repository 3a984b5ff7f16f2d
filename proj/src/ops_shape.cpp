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

#include <numeric>

#include "ndlp/ops.hpp"

namespace ndlp {

namespace {

int normalize_axis(int axis, int rank) {
  if (axis < 0) axis += rank;
  NDLP_CHECK_SHAPE(axis >= 0 && axis < rank, "axis ", axis, " out of range for rank ", rank);
  return axis;
}

Index prod(const Shape& s, int from, int to) {
  Index p = 1;
  for (int i = from; i < to; ++i) p *= s[i];
  return p;
}

// Gather/scatter index map shared by the two pixel rearrangements:
// idx[o] is the input offset feeding output offset o of pixel_unshuffle.
std::vector<Index> unshuffle_map(Index c, Index h, Index w, Index r) {
  const Index ho = h / r, wo = w / r;
  std::vector<Index> idx(static_cast<std::size_t>(c * h * w));
  std::size_t o = 0;
  for (Index ch = 0; ch < c; ++ch)
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j)
        for (Index y = 0; y < ho; ++y)
          for (Index x = 0; x < wo; ++x) idx[o++] = (ch * h + y * r + i) * w + x * r + j;
  return idx;
}

}  // namespace

template <typename S>
Tensor<S> pixel_unshuffle(const Tensor<S>& x, Index r) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "pixel_unshuffle: input must be [C,H,W]");
  NDLP_CHECK(r >= 1, "pixel_unshuffle: factor must be >= 1");
  const Index c = x.dim(0), h = x.dim(1), w = x.dim(2);
  NDLP_CHECK_SHAPE(h % r == 0 && w % r == 0, "pixel_unshuffle: ", h, "x", w,
                   " not divisible by ", r);
  auto idx = std::make_shared<std::vector<Index>>(unshuffle_map(c, h, w, r));
  Array out(x.size());
  for (Index o = 0; o < out.size(); ++o) out[o] = x.values()[(*idx)[o]];
  return make_op<S>("pixel_unshuffle", {c * r * r, h / r, w / r}, std::move(out), {x},
                    [x, idx](const Array& g) {
                      Array gx(x.size());
                      for (Index o = 0; o < g.size(); ++o) gx[(*idx)[o]] = g[o];
                      accumulate_grad(x, gx);
                    });
}

template <typename S>
Tensor<S> pixel_shuffle(const Tensor<S>& x, Index r) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "pixel_shuffle: input must be [C,H,W]");
  NDLP_CHECK(r >= 1, "pixel_shuffle: factor must be >= 1");
  NDLP_CHECK_SHAPE(x.dim(0) % (r * r) == 0, "pixel_shuffle: ", x.dim(0),
                   " channels not divisible by ", r * r);
  const Index c = x.dim(0) / (r * r), h = x.dim(1) * r, w = x.dim(2) * r;
  auto idx = std::make_shared<std::vector<Index>>(unshuffle_map(c, h, w, r));
  Array out(x.size());
  for (Index o = 0; o < out.size(); ++o) out[(*idx)[o]] = x.values()[o];
  return make_op<S>("pixel_shuffle", {c, h, w}, std::move(out), {x}, [x, idx](const Array& g) {
    Array gx(x.size());
    for (Index o = 0; o < gx.size(); ++o) gx[o] = g[(*idx)[o]];
    accumulate_grad(x, gx);
  });
}

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(!parts.empty(), "concat: no parts");
  const Shape& first = parts.front().shape();
  const int rank = static_cast<int>(first.size());
  axis = normalize_axis(axis, rank);

  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    NDLP_CHECK_SHAPE(p.rank() == rank, "concat: rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != axis)
        NDLP_CHECK_SHAPE(p.shape()[i] == first[i], "concat: extent mismatch on axis ", i, ": ",
                         to_string(p.shape()), " vs ", to_string(first));
    out_shape[axis] += p.shape()[axis];
  }
  const Index outer = prod(first, 0, axis);
  const Index inner = prod(first, axis + 1, rank);
  const Index out_row = out_shape[axis] * inner;

  Array out(numel(out_shape));
  Index offset = 0;
  std::vector<Index> offsets;
  for (const auto& p : parts) {
    const Index row = p.shape()[axis] * inner;
    for (Index o = 0; o < outer; ++o)
      out.segment(o * out_row + offset, row) = p.values().segment(o * row, row);
    offsets.push_back(offset);
    offset += row;
  }
  return make_op<S>("concat", std::move(out_shape), std::move(out), parts,
                    [parts, offsets, outer, inner, out_row, axis](const Array& g) {
                      for (std::size_t k = 0; k < parts.size(); ++k) {
                        const auto& p = parts[k];
                        if (!p.requires_grad()) continue;
                        const Index row = p.shape()[axis] * inner;
                        Array gp(p.size());
                        for (Index o = 0; o < outer; ++o)
                          gp.segment(o * row, row) = g.segment(o * out_row + offsets[k], row);
                        accumulate_grad(p, gp);
                      }
                    });
}

template <typename S>
Tensor<S> slice(const Tensor<S>& x, int axis, Index begin, Index end) {
  using Array = typename Tensor<S>::Array;
  const int rank = x.rank();
  axis = normalize_axis(axis, rank);
  const Index extent = x.shape()[axis];
  NDLP_CHECK_SHAPE(0 <= begin && begin < end && end <= extent, "slice: range [", begin, ",", end,
                   ") invalid for extent ", extent);
  const Index outer = prod(x.shape(), 0, axis);
  const Index inner = prod(x.shape(), axis + 1, rank);
  const Index in_row = extent * inner;
  const Index row = (end - begin) * inner;
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  Array out(outer * row);
  for (Index o = 0; o < outer; ++o)
    out.segment(o * row, row) = x.values().segment(o * in_row + begin * inner, row);
  return make_op<S>("slice", std::move(out_shape), std::move(out), {x},
                    [x, outer, row, in_row, begin, inner](const Array& g) {
                      Array gx = Array::Zero(x.size());
                      for (Index o = 0; o < outer; ++o)
                        gx.segment(o * in_row + begin * inner, row) = g.segment(o * row, row);
                      accumulate_grad(x, gx);
                    });
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(numel(shape) == x.size(), "reshape: ", to_string(x.shape()), " -> ",
                   to_string(shape), " changes the element count");
  return make_op<S>("reshape", std::move(shape), x.values(), {x},
                    [x](const Array& g) { accumulate_grad(x, g); });
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& x) {
  using Array = typename Tensor<S>::Array;
  using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  NDLP_CHECK_SHAPE(x.rank() == 2, "transpose: input must be rank 2");
  const Index m = x.dim(0), n = x.dim(1);
  Array out(x.size());
  Eigen::Map<RowMat>(out.data(), n, m) = Eigen::Map<const RowMat>(x.values().data(), m, n).transpose();
  return make_op<S>("transpose", {n, m}, std::move(out), {x}, [x, m, n](const Array& g) {
    Array gx(x.size());
    Eigen::Map<RowMat>(gx.data(), m, n) = Eigen::Map<const RowMat>(g.data(), n, m).transpose();
    accumulate_grad(x, gx);
  });
}

template <typename S>
Tensor<S> pad_reflect(const Tensor<S>& x, Index top, Index bottom, Index left, Index right) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(x.rank() == 3, "pad_reflect: input must be [C,H,W]");
  NDLP_CHECK(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, "pad_reflect: negative pad");
  const Index c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const Index ho = h + top + bottom, wo = w + left + right;
  auto src = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(c * ho * wo));
  for (Index ch = 0; ch < c; ++ch)
    for (Index i = 0; i < ho; ++i)
      for (Index j = 0; j < wo; ++j)
        (*src)[(ch * ho + i) * wo + j] =
            (ch * h + reflect_index(i - top, h)) * w + reflect_index(j - left, w);
  Array out(c * ho * wo);
  for (Index o = 0; o < out.size(); ++o) out[o] = x.values()[(*src)[o]];
  return make_op<S>("pad_reflect", {c, ho, wo}, std::move(out), {x}, [x, src](const Array& g) {
    Array gx = Array::Zero(x.size());
    for (Index o = 0; o < g.size(); ++o) gx[(*src)[o]] += g[o];
    accumulate_grad(x, gx);
  });
}

template <typename S>
Tensor<S> crop(const Tensor<S>& x, Index top, Index left, Index h, Index w) {
  NDLP_CHECK_SHAPE(x.rank() == 3, "crop: input must be [C,H,W]");
  return slice(slice(x, 1, top, top + h), 2, left, left + w);
}

#define NDLP_INSTANTIATE(S)                                                               \
  template Tensor<S> pixel_unshuffle<S>(const Tensor<S>&, Index);                         \
  template Tensor<S> pixel_shuffle<S>(const Tensor<S>&, Index);                           \
  template Tensor<S> concat<S>(const std::vector<Tensor<S>>&, int);                       \
  template Tensor<S> slice<S>(const Tensor<S>&, int, Index, Index);                       \
  template Tensor<S> reshape<S>(const Tensor<S>&, Shape);                                 \
  template Tensor<S> transpose<S>(const Tensor<S>&);                                      \
  template Tensor<S> pad_reflect<S>(const Tensor<S>&, Index, Index, Index, Index);        \
  template Tensor<S> crop<S>(const Tensor<S>&, Index, Index, Index, Index);

NDLP_INSTANTIATE(float)
NDLP_INSTANTIATE(double)
#undef NDLP_INSTANTIATE

}  // namespace ndlp
