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

#include "ndlp/net.hpp"

#include <cmath>

namespace ndlp {

namespace {

template <typename S>
ConvWeights<S> add_conv(ParameterSet<S>& p, const std::string& name, Index out, Index in,
                        Index k, bool bias) {
  ConvWeights<S> c;
  c.weight = p.add(name + ".weight", {out, in, k, k}, Init::kKaiming);
  if (bias) c.bias = p.add(name + ".bias", {out}, Init::kZeros);
  return c;
}

template <typename S>
Tensor<S> apply(const Tensor<S>& x, const ConvWeights<S>& c) {
  return conv2d(x, c.weight, c.bias, 1, Padding::same(c.weight.dim(2)));
}

template <typename S>
std::vector<BlockWeights<S>> add_blocks(ParameterSet<S>& p, const std::string& prefix, int count,
                                        int dim, int heads, double expansion) {
  std::vector<BlockWeights<S>> blocks;
  for (int b = 0; b < count; ++b) {
    const std::string name = prefix + ".block" + std::to_string(b);
    blocks.push_back({register_mdta(name + ".attn", dim, heads, p),
                      register_gdfn(name + ".ffn", dim, expansion, p)});
  }
  return blocks;
}

template <typename S>
Tensor<S> run_blocks(Tensor<S> x, const std::vector<BlockWeights<S>>& blocks) {
  for (const auto& b : blocks) x = gdfn_forward(mdta_forward(x, b.attn), b.ffn);
  return x;
}

}  // namespace

// Registration ------------------------------------------------------------------

template <typename S>
RlpWeights<S> register_rlp(const NetConfig& cfg, ParameterSet<S>& p) {
  RlpWeights<S> w;
  w.head = add_conv(p, "rlp.head", cfg.rlp_channels, 4, 3, true);
  for (int r = 0; r < cfg.rlp_res_blocks; ++r) {
    const std::string name = "rlp.res" + std::to_string(r);
    w.res.push_back({add_conv(p, name + ".conv1", cfg.rlp_channels, cfg.rlp_channels, 3, true),
                     add_conv(p, name + ".conv2", cfg.rlp_channels, cfg.rlp_channels, 3, true)});
  }
  w.tail = add_conv(p, "rlp.tail", 1, cfg.rlp_channels, 3, true);
  return w;
}

template <typename S>
EcaWeights<S> register_eca(const std::string& prefix, int channels, int reduction,
                           ParameterSet<S>& p) {
  NDLP_CHECK_SHAPE(channels >= reduction, "ECA: ", channels, " channels below reduction ",
                   reduction);
  const int hidden = channels / reduction;
  return {add_conv(p, prefix + ".reduce", hidden, channels, 1, true),
          add_conv(p, prefix + ".expand", channels, hidden, 1, true)};
}

template <typename S>
MdtaWeights<S> register_mdta(const std::string& prefix, int channels, int heads,
                             ParameterSet<S>& p) {
  NDLP_CHECK_SHAPE(heads >= 1 && channels % heads == 0, "MDTA: ", channels,
                   " channels not divisible by ", heads, " heads");
  MdtaWeights<S> w;
  w.norm = p.add(prefix + ".norm.gamma", {channels}, Init::kOnes);
  w.qkv = p.add(prefix + ".qkv.weight", {3 * channels, channels, 1, 1}, Init::kKaiming);
  w.qkv_dw = p.add(prefix + ".qkv_dw.weight", {3 * channels, 1, 3, 3}, Init::kKaiming);
  w.temperature = p.add(prefix + ".temperature", {heads}, Init::kOnes);
  w.proj = p.add(prefix + ".proj.weight", {channels, channels, 1, 1}, Init::kKaiming);
  w.heads = heads;
  return w;
}

template <typename S>
GdfnWeights<S> register_gdfn(const std::string& prefix, int channels, double expansion,
                             ParameterSet<S>& p) {
  const Index hidden = static_cast<Index>(channels * expansion);
  NDLP_CHECK(hidden >= 1, "GDFN: expansion leaves no hidden channels");
  GdfnWeights<S> w;
  w.norm = p.add(prefix + ".norm.gamma", {channels}, Init::kOnes);
  w.expand = p.add(prefix + ".expand.weight", {2 * hidden, channels, 1, 1}, Init::kKaiming);
  w.dw = p.add(prefix + ".dw.weight", {2 * hidden, 1, 3, 3}, Init::kKaiming);
  w.project = p.add(prefix + ".project.weight", {channels, hidden, 1, 1}, Init::kKaiming);
  return w;
}

template <typename S>
NetWeights<S> register_net(const NetConfig& cfg, ParameterSet<S>& p) {
  cfg.validate();
  NetWeights<S> w;
  w.rlp = register_rlp(cfg, p);
  const int c = cfg.base_dim;
  w.embed = add_conv(p, "embed", c, cfg.embed_prior ? 4 : 3, 3, true);
  if (!cfg.disable_ppm) {
    PpmWeights<S> ppm;
    const int wide = c + cfg.spc_channels();
    if (!cfg.disable_eca) ppm.eca = register_eca("ppm.eca", wide, cfg.eca_reduction, p);
    ppm.fuse = add_conv(p, "ppm.fuse", c, wide, 1, true);
    w.ppm = std::move(ppm);
  }
  for (int l = 0; l < 4; ++l) {
    w.encoder[l] = add_blocks(p, "enc" + std::to_string(l), cfg.blocks_per_level[l],
                              cfg.level_dim(l), cfg.heads_per_level[l], cfg.gdfn_expansion);
    if (l < 3) {
      const Index d = cfg.level_dim(l), next = cfg.level_dim(l + 1);
      w.down[l] = p.add("down" + std::to_string(l) + ".weight", {next / 4, d, 1, 1},
                        Init::kKaiming);
    }
  }
  for (int l = 2; l >= 0; --l) {
    const Index d = cfg.level_dim(l), next = cfg.level_dim(l + 1);
    const std::string tag = std::to_string(l);
    w.up[l] = p.add("up" + tag + ".weight", {4 * d, next, 1, 1}, Init::kKaiming);
    w.fuse[l] = p.add("fuse" + tag + ".weight", {d, 2 * d, 1, 1}, Init::kKaiming);
    w.decoder[l] = add_blocks(p, "dec" + tag, cfg.blocks_per_level[l], cfg.level_dim(l),
                              cfg.heads_per_level[l], cfg.gdfn_expansion);
  }
  w.output = add_conv(p, "output", 3, c, 3, true);
  return w;
}

// Forward -----------------------------------------------------------------------

template <typename S>
PriorMap<S> rlp_stage(const Tensor<S>& image, const PriorMap<S>& prior, const RlpWeights<S>& w) {
  Tensor<S> f = apply(concat<S>({image, prior}, 0), w.head);
  for (const auto& r : w.res) f = add(f, apply(relu(apply(f, r[0])), r[1]));
  return sigmoid(apply(f, w.tail));
}

template <typename S>
PriorMap<S> rlp_forward(const Tensor<S>& image, int stages, const RlpWeights<S>& w) {
  NDLP_CHECK_SHAPE(image.rank() == 3 && image.dim(0) == 3, "rlp_forward: expected [3,H,W], got ",
                   to_string(image.shape()));
  NDLP_CHECK(stages >= 1, "rlp_forward: need at least one stage");
  PriorMap<S> prior = Tensor<S>::full({1, image.dim(1), image.dim(2)}, S(0.5));
  for (int k = 0; k < stages; ++k) prior = rlp_stage(image, prior, w);
  return prior;
}

template <typename S>
PositionCode<S> spc_encode(Index height, Index width, const PriorMap<S>& prior,
                           const NetConfig& cfg) {
  using Array = typename Tensor<S>::Array;
  NDLP_CHECK_SHAPE(prior.rank() == 3 && prior.dim(0) == 1 && prior.dim(1) == height &&
                       prior.dim(2) == width,
                   "spc_encode: prior ", to_string(prior.shape()), " does not match ", height,
                   "x", width);
  const Index plane = height * width;
  const int channels = cfg.spc_channels();
  Array out(channels * plane);

  // Per-channel divisors base^(2i/feats); z-block divisors are reused by the
  // gradient when the prior is allowed to receive one.
  auto divisor = [&](int i, int feats) {
    return std::pow(cfg.spc_base, 2.0 * i / static_cast<double>(feats));
  };
  Index ch = 0;
  for (int axis = 0; axis < 2; ++axis) {
    const int feats = cfg.spc_feats[axis];
    for (int i = 0; i < feats / 2; ++i, ch += 2) {
      const double div = divisor(i, feats);
      for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) {
          const double v = (axis == 0 ? static_cast<double>(x) : static_cast<double>(y)) / div;
          out[ch * plane + y * width + x] = static_cast<S>(std::sin(v));
          out[(ch + 1) * plane + y * width + x] = static_cast<S>(std::cos(v));
        }
      }
    }
  }
  const Index z_begin = ch;
  const int zfeats = cfg.spc_feats[2];
  std::vector<double> zdiv;
  for (int i = 0; i < zfeats / 2; ++i, ch += 2) {
    zdiv.push_back(divisor(i, zfeats));
    for (Index p = 0; p < plane; ++p) {
      const double v = cfg.z_scale * static_cast<double>(prior.values()[p]) / zdiv.back();
      out[ch * plane + p] = static_cast<S>(std::sin(v));
      out[(ch + 1) * plane + p] = static_cast<S>(std::cos(v));
    }
  }

  std::vector<Tensor<S>> inputs;
  if (cfg.spc_prior_grad) inputs.push_back(prior);
  const double z_scale = cfg.z_scale;
  return make_op<S>("spc_encode", {channels, height, width}, std::move(out), std::move(inputs),
                    [prior, zdiv, z_begin, plane, z_scale](const Array& g) {
                      Array gp = Array::Zero(plane);
                      for (std::size_t i = 0; i < zdiv.size(); ++i) {
                        const Index base = (z_begin + 2 * static_cast<Index>(i)) * plane;
                        const double k = z_scale / zdiv[i];
                        for (Index p = 0; p < plane; ++p) {
                          const double v = k * static_cast<double>(prior.values()[p]);
                          gp[p] += static_cast<S>(k * (static_cast<double>(g[base + p]) * std::cos(v) -
                                                       static_cast<double>(g[base + plane + p]) *
                                                           std::sin(v)));
                        }
                      }
                      accumulate_grad(prior, gp);
                    });
}

template <typename S>
Tensor<S> eca_attention(const Tensor<S>& x, const EcaWeights<S>& w) {
  const Index c = x.dim(0);
  Tensor<S> pooled = reshape(global_avg_pool(x), {c, 1, 1});
  Tensor<S> hidden = relu(conv2d(pooled, w.reduce.weight, w.reduce.bias));
  return reshape(sigmoid(conv2d(hidden, w.expand.weight, w.expand.bias)), {c});
}

template <typename S>
Tensor<S> eca_forward(const Tensor<S>& x, const EcaWeights<S>& w) {
  NDLP_CHECK_SHAPE(x.rank() == 3, "eca_forward: expected [C,H,W]");
  NDLP_CHECK_SHAPE(w.reduce.weight.dim(1) == x.dim(0), "eca_forward: weights expect ",
                   w.reduce.weight.dim(1), " channels, got ", x.dim(0));
  return mul_channel(x, eca_attention(x, w));
}

template <typename S>
Tensor<S> ppm_forward(const Tensor<S>& embedded, const PriorMap<S>& prior, const NetConfig& cfg,
                      const PpmWeights<S>* w) {
  if (w == nullptr) return embedded;
  NDLP_CHECK_SHAPE(embedded.rank() == 3, "ppm_forward: expected [C,H,W]");
  const Tensor<S> code = spc_encode(embedded.dim(1), embedded.dim(2), prior, cfg);
  Tensor<S> wide = concat<S>({embedded, code}, 0);
  if (w->eca) wide = eca_forward(wide, *w->eca);
  return apply(wide, w->fuse);
}

template <typename S>
Tensor<S> mdta_forward(const Tensor<S>& x, const MdtaWeights<S>& w,
                       std::vector<Tensor<S>>* attention) {
  NDLP_CHECK_SHAPE(x.rank() == 3, "mdta_forward: expected [C,H,W]");
  const Index c = x.dim(0), h = x.dim(1), wd = x.dim(2), hw = h * wd;
  NDLP_CHECK_SHAPE(c % w.heads == 0, "mdta_forward: ", c, " channels not divisible by ", w.heads,
                   " heads");
  const Index per_head = c / w.heads;

  Tensor<S> qkv = depthwise_conv2d(conv2d(layer_norm_channels(x, w.norm), w.qkv), w.qkv_dw);
  qkv = reshape(qkv, {3 * c, hw});
  std::vector<Tensor<S>> outputs;
  for (int head = 0; head < w.heads; ++head) {
    const Index b = head * per_head;
    Tensor<S> q = l2_normalize_rows(slice(qkv, 0, b, b + per_head));
    Tensor<S> k = l2_normalize_rows(slice(qkv, 0, c + b, c + b + per_head));
    Tensor<S> v = slice(qkv, 0, 2 * c + b, 2 * c + b + per_head);
    Tensor<S> logits = mul_scalar_tensor(matmul(q, transpose(k)),
                                         slice(w.temperature, 0, head, head + 1));
    Tensor<S> attn = softmax(logits, 1);
    if (attention != nullptr) attention->push_back(attn);
    outputs.push_back(matmul(attn, v));
  }
  Tensor<S> merged = reshape(concat(outputs, 0), {c, h, wd});
  return add(x, conv2d(merged, w.proj));
}

template <typename S>
Tensor<S> gdfn_forward(const Tensor<S>& x, const GdfnWeights<S>& w) {
  NDLP_CHECK_SHAPE(x.rank() == 3, "gdfn_forward: expected [C,H,W]");
  const Index hidden = w.project.dim(1);
  Tensor<S> e = depthwise_conv2d(conv2d(layer_norm_channels(x, w.norm), w.expand), w.dw);
  Tensor<S> gated = mul(gelu(slice(e, 0, 0, hidden)), slice(e, 0, hidden, 2 * hidden));
  return add(x, conv2d(gated, w.project));
}

template <typename S>
Tensor<S> net_forward(const Tensor<S>& image, const NetConfig& cfg, const NetWeights<S>& w,
                      Mode mode) {
  NDLP_CHECK_SHAPE(image.rank() == 3 && image.dim(0) == 3, "net_forward: expected RGB [3,H,W], got ",
                   to_string(image.shape()));
  NDLP_CHECK((image.values() >= S(0)).all() && (image.values() <= S(1)).all(),
             "net_forward: input values must lie in [0,1]");
  const Index h = image.dim(1), wd = image.dim(2);
  const Index pad_h = (8 - h % 8) % 8, pad_w = (8 - wd % 8) % 8;
  const Tensor<S> x = (pad_h || pad_w) ? pad_reflect(image, 0, pad_h, 0, pad_w) : image;

  const PriorMap<S> prior = rlp_forward(x, cfg.rlp_stages, w.rlp);
  Tensor<S> f = apply(cfg.embed_prior ? concat<S>({x, prior}, 0) : x, w.embed);
  f = ppm_forward(f, prior, cfg, w.ppm ? &*w.ppm : nullptr);

  std::array<Tensor<S>, 4> skips;
  skips[0] = run_blocks(f, w.encoder[0]);
  for (int l = 0; l < 3; ++l)
    skips[l + 1] = run_blocks(pixel_unshuffle(conv2d(skips[l], w.down[l]), Index{2}),
                              w.encoder[l + 1]);

  Tensor<S> y = skips[3];
  for (int l = 2; l >= 0; --l) {
    Tensor<S> up = pixel_shuffle(conv2d(y, w.up[l]), Index{2});
    y = run_blocks(conv2d(concat<S>({up, skips[l]}, 0), w.fuse[l]), w.decoder[l]);
  }
  Tensor<S> out = apply(y, w.output);
  if (cfg.global_residual) out = add(out, x);
  if (pad_h || pad_w) out = crop(out, 0, 0, h, wd);

  if (mode == Mode::kInfer) {
    Tensor<S> clamped = out.detach();
    clamped.mutable_values() = clamped.values().max(S(0)).min(S(1));
    return clamped;
  }
  return out;
}

template <typename S>
Ndlpnet<S>::Ndlpnet(NetConfig cfg) : cfg_(std::move(cfg)) {
  weights_ = register_net(cfg_, params_);
}

#define NDLP_INSTANTIATE(S)                                                                    \
  template RlpWeights<S> register_rlp<S>(const NetConfig&, ParameterSet<S>&);                  \
  template EcaWeights<S> register_eca<S>(const std::string&, int, int, ParameterSet<S>&);      \
  template MdtaWeights<S> register_mdta<S>(const std::string&, int, int, ParameterSet<S>&);    \
  template GdfnWeights<S> register_gdfn<S>(const std::string&, int, double, ParameterSet<S>&); \
  template NetWeights<S> register_net<S>(const NetConfig&, ParameterSet<S>&);                  \
  template PriorMap<S> rlp_stage<S>(const Tensor<S>&, const PriorMap<S>&, const RlpWeights<S>&); \
  template PriorMap<S> rlp_forward<S>(const Tensor<S>&, int, const RlpWeights<S>&);            \
  template PositionCode<S> spc_encode<S>(Index, Index, const PriorMap<S>&, const NetConfig&);  \
  template Tensor<S> eca_attention<S>(const Tensor<S>&, const EcaWeights<S>&);                 \
  template Tensor<S> eca_forward<S>(const Tensor<S>&, const EcaWeights<S>&);                   \
  template Tensor<S> ppm_forward<S>(const Tensor<S>&, const PriorMap<S>&, const NetConfig&,    \
                                    const PpmWeights<S>*);                                     \
  template Tensor<S> mdta_forward<S>(const Tensor<S>&, const MdtaWeights<S>&,                  \
                                     std::vector<Tensor<S>>*);                                 \
  template Tensor<S> gdfn_forward<S>(const Tensor<S>&, const GdfnWeights<S>&);                 \
  template Tensor<S> net_forward<S>(const Tensor<S>&, const NetConfig&, const NetWeights<S>&,  \
                                    Mode);                                                     \
  template class Ndlpnet<S>;

NDLP_INSTANTIATE(float)
NDLP_INSTANTIATE(double)
#undef NDLP_INSTANTIATE

}  // namespace ndlp
