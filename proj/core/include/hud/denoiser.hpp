#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hud/nn.hpp"
#include "hud/rng.hpp"

namespace hud {

struct DenoiserConfig {
  int channels = 4;        // latent channels in = out
  int base_width = 32;
  int depth = 2;           // resolution levels; spatial size must divide 2^(depth-1)
  int time_embed_dim = 128;
  int groups = 8;
  std::vector<int> channel_mults{1, 2, 4};
  bool zero_init_head = true;

  int level_width(int level) const { return base_width * channel_mults[level]; }
  int min_divisor() const { return 1 << (depth - 1); }
};

struct ParamBlock {
  std::string name;
  std::size_t off = 0;
  std::size_t n = 0;
};

// Epsilon-prediction U-Net: sinusoidal time embedding through a two-layer MLP,
// residual convolution blocks with group normalization and SiLU, stride-2
// convolution downsampling, nearest-neighbor upsampling, channel-concat skip
// connections. Parameters live in one flat vector; `layout()` is the canonical
// serialization order.
template <class S>
class UNet {
 public:
  using Tensor = nn::Tensor3<S>;

  UNet(DenoiserConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
    if (cfg_.channels < 1) throw std::invalid_argument("denoiser: channels >= 1");
    if (cfg_.depth < 1) throw std::invalid_argument("denoiser: depth >= 1");
    if (cfg_.base_width < 1) throw std::invalid_argument("denoiser: base_width >= 1");
    if (cfg_.time_embed_dim < 2 || cfg_.time_embed_dim % 2 != 0)
      throw std::invalid_argument("denoiser: time_embed_dim must be even and >= 2");
    if (static_cast<int>(cfg_.channel_mults.size()) < cfg_.depth)
      throw std::invalid_argument("denoiser: need a channel multiplier per level");
    build();
    init_params();
  }

  const DenoiserConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t param_count() const { return w_.size(); }
  std::vector<S>& params() { return w_; }
  const std::vector<S>& params() const { return w_; }
  const std::vector<ParamBlock>& layout() const { return blocks_; }

  struct ResCache {
    nn::GnCache<S> gn1;
    Tensor pre1;
    nn::ConvCache<S> conv1;
    nn::GnCache<S> gn2;
    Tensor pre2;
    nn::ConvCache<S> conv2;
    nn::ConvCache<S> skip;
  };

  struct Workspace {
    std::vector<S> e0, a1, s1, temb, st, g_st;
    nn::ConvCache<S> stem;
    std::vector<std::array<ResCache, 2>> down;
    std::vector<nn::ConvCache<S>> down_conv;
    ResCache mid0, mid1;
    std::vector<std::array<ResCache, 2>> up;
    std::vector<nn::ConvCache<S>> up_conv;
    std::vector<Tensor> skips;
    nn::GnCache<S> head_gn;
    Tensor head_gn_out;
    nn::ConvCache<S> head_conv;
  };

  Tensor forward(const Tensor& x, int t, Workspace& ws) const {
    if (x.c != cfg_.channels)
      throw std::invalid_argument("denoiser: channel count mismatch");
    const int div = cfg_.min_divisor();
    if (x.h % div != 0 || x.w % div != 0 || x.h < div || x.w < div)
      throw std::invalid_argument("denoiser: spatial size not divisible by " +
                                  std::to_string(div));
    if (t < 1) throw std::invalid_argument("denoiser: step t out of range");

    ws.down.resize(cfg_.depth);
    ws.down_conv.resize(cfg_.depth > 1 ? cfg_.depth - 1 : 0);
    ws.up.resize(cfg_.depth);
    ws.up_conv.resize(cfg_.depth);
    ws.skips.assign(cfg_.depth, Tensor());

    ws.e0 = sinusoidal(t);
    ws.a1 = nn::linear_fwd(ws.e0, p(tm1_w_), p(tm1_b_), cfg_.time_embed_dim);
    ws.s1 = silu_vec(ws.a1);
    ws.temb = nn::linear_fwd(ws.s1, p(tm2_w_), p(tm2_b_), cfg_.time_embed_dim);
    ws.st = silu_vec(ws.temb);

    Tensor h = nn::conv2d_fwd(x, p(stem_w_), p(stem_b_), cfg_.level_width(0), 3, 1,
                              ws.stem);
    for (int l = 0; l < cfg_.depth; ++l) {
      h = res_forward(down_[l][0], h, ws.st, ws.down[l][0]);
      h = res_forward(down_[l][1], h, ws.st, ws.down[l][1]);
      ws.skips[l] = h;
      if (l + 1 < cfg_.depth)
        h = nn::conv2d_fwd(h, p(down_w_[l]), p(down_b_[l]), cfg_.level_width(l), 3,
                           2, ws.down_conv[l]);
    }
    h = res_forward(mid0_, h, ws.st, ws.mid0);
    h = res_forward(mid1_, h, ws.st, ws.mid1);
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      h = nn::concat_channels(h, ws.skips[l]);
      h = res_forward(up_[l][0], h, ws.st, ws.up[l][0]);
      h = res_forward(up_[l][1], h, ws.st, ws.up[l][1]);
      if (l > 0) {
        h = nn::upsample2x_fwd(h);
        h = nn::conv2d_fwd(h, p(up_w_[l]), p(up_b_[l]), cfg_.level_width(l - 1), 3,
                           1, ws.up_conv[l]);
      }
    }
    ws.head_gn_out = nn::groupnorm_fwd(h, p(head_gn_g_), p(head_gn_b_),
                                       eff_groups(cfg_.level_width(0)), ws.head_gn);
    const Tensor act = nn::silu_fwd(ws.head_gn_out);
    return nn::conv2d_fwd(act, p(head_w_), p(head_b_), cfg_.channels, 3, 1,
                          ws.head_conv);
  }

  // Accumulates parameter gradients into `grad` (length param_count) and
  // returns the gradient w.r.t. the input. Requires the workspace filled by a
  // matching forward call.
  Tensor backward(const Tensor& gy, Workspace& ws, S* grad) const {
    ws.g_st.assign(cfg_.time_embed_dim, S(0));

    Tensor gact = nn::conv2d_bwd(gy, p(head_w_), g(grad, head_w_), g(grad, head_b_),
                                 3, 1, ws.head_conv);
    Tensor gpre = nn::silu_bwd(gact, ws.head_gn_out);
    Tensor gh = nn::groupnorm_bwd(gpre, p(head_gn_g_), g(grad, head_gn_g_),
                                  g(grad, head_gn_b_), ws.head_gn);

    std::vector<Tensor> gskips(cfg_.depth);
    for (int l = 0; l < cfg_.depth; ++l) {
      if (l > 0) {
        gh = nn::conv2d_bwd(gh, p(up_w_[l]), g(grad, up_w_[l]), g(grad, up_b_[l]),
                            3, 1, ws.up_conv[l]);
        gh = nn::upsample2x_bwd(gh);
      }
      gh = res_backward(up_[l][1], gh, ws.up[l][1], ws, grad);
      gh = res_backward(up_[l][0], gh, ws.up[l][0], ws, grad);
      Tensor gmain;
      nn::split_channels(gh, gmain, gskips[l], gh.c - ws.skips[l].c);
      gh = std::move(gmain);
    }

    gh = res_backward(mid1_, gh, ws.mid1, ws, grad);
    gh = res_backward(mid0_, gh, ws.mid0, ws, grad);

    for (int l = cfg_.depth - 1; l >= 0; --l) {
      if (l + 1 < cfg_.depth)
        gh = nn::conv2d_bwd(gh, p(down_w_[l]), g(grad, down_w_[l]),
                            g(grad, down_b_[l]), 3, 2, ws.down_conv[l]);
      for (std::size_t i = 0; i < gh.size(); ++i) gh.v[i] += gskips[l].v[i];
      gh = res_backward(down_[l][1], gh, ws.down[l][1], ws, grad);
      gh = res_backward(down_[l][0], gh, ws.down[l][0], ws, grad);
    }
    Tensor gx = nn::conv2d_bwd(gh, p(stem_w_), g(grad, stem_w_), g(grad, stem_b_),
                               3, 1, ws.stem);

    std::vector<S> g_temb = silu_vec_bwd(ws.g_st, ws.temb);
    std::vector<S> g_s1 =
        nn::linear_bwd(g_temb, ws.s1, p(tm2_w_), g(grad, tm2_w_), g(grad, tm2_b_));
    std::vector<S> g_a1 = silu_vec_bwd(g_s1, ws.a1);
    nn::linear_bwd(g_a1, ws.e0, p(tm1_w_), g(grad, tm1_w_), g(grad, tm1_b_));
    return gx;
  }

  Tensor forward(const Tensor& x, int t) const {
    Workspace ws;
    return forward(x, t, ws);
  }

 private:
  struct ResSpec {
    int cin = 0, cout = 0, gin = 0, gout = 0;
    bool has_skip = false;
    std::size_t gn1_g = 0, gn1_b = 0, c1_w = 0, c1_b = 0, tp_w = 0, tp_b = 0,
                gn2_g = 0, gn2_b = 0, c2_w = 0, c2_b = 0, sk_w = 0, sk_b = 0;
  };

  enum class Init { kZero, kOne, kNormal };

  const S* p(std::size_t off) const { return w_.data() + off; }
  static S* g(S* grad, std::size_t off) { return grad + off; }

  std::size_t add(const std::string& name, std::size_t n, Init init,
                  std::size_t fan_in = 0) {
    const std::size_t off = w_.size();
    w_.resize(off + n, S(0));
    blocks_.push_back({name, off, n});
    init_kind_.push_back(init);
    fan_in_.push_back(fan_in);
    return off;
  }

  int eff_groups(int channels) const {
    int gr = std::min(cfg_.groups, channels);
    while (channels % gr != 0) --gr;
    return gr;
  }

  ResSpec add_res(const std::string& name, int cin, int cout) {
    ResSpec r;
    r.cin = cin;
    r.cout = cout;
    r.gin = eff_groups(cin);
    r.gout = eff_groups(cout);
    r.has_skip = cin != cout;
    r.gn1_g = add(name + ".gn1.gamma", cin, Init::kOne);
    r.gn1_b = add(name + ".gn1.beta", cin, Init::kZero);
    r.c1_w = add(name + ".conv1.weight", static_cast<std::size_t>(cout) * cin * 9,
                 Init::kNormal, static_cast<std::size_t>(cin) * 9);
    r.c1_b = add(name + ".conv1.bias", cout, Init::kZero);
    r.tp_w = add(name + ".time_proj.weight",
                 static_cast<std::size_t>(cout) * cfg_.time_embed_dim, Init::kNormal,
                 cfg_.time_embed_dim);
    r.tp_b = add(name + ".time_proj.bias", cout, Init::kZero);
    r.gn2_g = add(name + ".gn2.gamma", cout, Init::kOne);
    r.gn2_b = add(name + ".gn2.beta", cout, Init::kZero);
    r.c2_w = add(name + ".conv2.weight", static_cast<std::size_t>(cout) * cout * 9,
                 Init::kNormal, static_cast<std::size_t>(cout) * 9);
    r.c2_b = add(name + ".conv2.bias", cout, Init::kZero);
    if (r.has_skip) {
      r.sk_w = add(name + ".skip.weight", static_cast<std::size_t>(cout) * cin,
                   Init::kNormal, cin);
      r.sk_b = add(name + ".skip.bias", cout, Init::kZero);
    }
    return r;
  }

  void build() {
    const int te = cfg_.time_embed_dim;
    tm1_w_ = add("time.lin1.weight", static_cast<std::size_t>(te) * te,
                 Init::kNormal, te);
    tm1_b_ = add("time.lin1.bias", te, Init::kZero);
    tm2_w_ = add("time.lin2.weight", static_cast<std::size_t>(te) * te,
                 Init::kNormal, te);
    tm2_b_ = add("time.lin2.bias", te, Init::kZero);

    stem_w_ = add("stem.weight",
                  static_cast<std::size_t>(cfg_.level_width(0)) * cfg_.channels * 9,
                  Init::kNormal, static_cast<std::size_t>(cfg_.channels) * 9);
    stem_b_ = add("stem.bias", cfg_.level_width(0), Init::kZero);

    down_.resize(cfg_.depth);
    down_w_.resize(cfg_.depth > 1 ? cfg_.depth - 1 : 0);
    down_b_.resize(down_w_.size());
    for (int l = 0; l < cfg_.depth; ++l) {
      const int cin = l == 0 ? cfg_.level_width(0) : cfg_.level_width(l - 1);
      const int cout = cfg_.level_width(l);
      const std::string base = "down" + std::to_string(l);
      down_[l][0] = add_res(base + ".res0", cin, cout);
      down_[l][1] = add_res(base + ".res1", cout, cout);
      if (l + 1 < cfg_.depth) {
        down_w_[l] = add(base + ".downsample.weight",
                         static_cast<std::size_t>(cout) * cout * 9, Init::kNormal,
                         static_cast<std::size_t>(cout) * 9);
        down_b_[l] = add(base + ".downsample.bias", cout, Init::kZero);
      }
    }

    const int cmid = cfg_.level_width(cfg_.depth - 1);
    mid0_ = add_res("mid.res0", cmid, cmid);
    mid1_ = add_res("mid.res1", cmid, cmid);

    up_.resize(cfg_.depth);
    up_w_.resize(cfg_.depth);
    up_b_.resize(cfg_.depth);
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      const int cl = cfg_.level_width(l);
      const std::string base = "up" + std::to_string(l);
      up_[l][0] = add_res(base + ".res0", 2 * cl, cl);
      up_[l][1] = add_res(base + ".res1", cl, cl);
      if (l > 0) {
        up_w_[l] = add(base + ".upsample.weight",
                       static_cast<std::size_t>(cfg_.level_width(l - 1)) * cl * 9,
                       Init::kNormal, static_cast<std::size_t>(cl) * 9);
        up_b_[l] = add(base + ".upsample.bias", cfg_.level_width(l - 1), Init::kZero);
      }
    }

    head_gn_g_ = add("head.gn.gamma", cfg_.level_width(0), Init::kOne);
    head_gn_b_ = add("head.gn.beta", cfg_.level_width(0), Init::kZero);
    head_w_ = add("head.conv.weight",
                  static_cast<std::size_t>(cfg_.channels) * cfg_.level_width(0) * 9,
                  cfg_.zero_init_head ? Init::kZero : Init::kNormal,
                  static_cast<std::size_t>(cfg_.level_width(0)) * 9);
    head_b_ = add("head.conv.bias", cfg_.channels, Init::kZero);
  }

  void init_params() {
    Rng rng(seed_);
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const ParamBlock& b = blocks_[bi];
      S* dst = w_.data() + b.off;
      switch (init_kind_[bi]) {
        case Init::kZero:
          break;
        case Init::kOne:
          for (std::size_t i = 0; i < b.n; ++i) dst[i] = S(1);
          break;
        case Init::kNormal: {
          const double std = std::sqrt(2.0 / static_cast<double>(fan_in_[bi]));
          for (std::size_t i = 0; i < b.n; ++i)
            dst[i] = static_cast<S>(rng.normal() * std);
          break;
        }
      }
    }
  }

  std::vector<S> sinusoidal(int t) const {
    const int half = cfg_.time_embed_dim / 2;
    std::vector<S> e(cfg_.time_embed_dim);
    for (int i = 0; i < half; ++i) {
      const double f =
          half == 1 ? 1.0 : std::exp(-std::log(10000.0) * i / (half - 1));
      e[i] = static_cast<S>(std::sin(t * f));
      e[half + i] = static_cast<S>(std::cos(t * f));
    }
    return e;
  }

  static std::vector<S> silu_vec(const std::vector<S>& x) {
    std::vector<S> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = nn::silu_scalar(x[i]);
    return y;
  }

  static std::vector<S> silu_vec_bwd(const std::vector<S>& gy,
                                     const std::vector<S>& x_in) {
    std::vector<S> gx(gy.size());
    for (std::size_t i = 0; i < gy.size(); ++i) {
      const S s = S(1) / (S(1) + std::exp(-x_in[i]));
      gx[i] = gy[i] * (s * (S(1) + x_in[i] * (S(1) - s)));
    }
    return gx;
  }

  Tensor res_forward(const ResSpec& r, const Tensor& x, const std::vector<S>& st,
                     ResCache& cc) const {
    cc.pre1 = nn::groupnorm_fwd(x, p(r.gn1_g), p(r.gn1_b), r.gin, cc.gn1);
    Tensor h = nn::silu_fwd(cc.pre1);
    h = nn::conv2d_fwd(h, p(r.c1_w), p(r.c1_b), r.cout, 3, 1, cc.conv1);
    const std::vector<S> tb = nn::linear_fwd(st, p(r.tp_w), p(r.tp_b), r.cout);
    const std::size_t plane = static_cast<std::size_t>(h.h) * h.w;
    for (int ci = 0; ci < r.cout; ++ci) {
      S* dst = h.v.data() + ci * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += tb[ci];
    }
    cc.pre2 = nn::groupnorm_fwd(h, p(r.gn2_g), p(r.gn2_b), r.gout, cc.gn2);
    const Tensor a2 = nn::silu_fwd(cc.pre2);
    Tensor out = nn::conv2d_fwd(a2, p(r.c2_w), p(r.c2_b), r.cout, 3, 1, cc.conv2);
    if (r.has_skip) {
      const Tensor sk =
          nn::conv2d_fwd(x, p(r.sk_w), p(r.sk_b), r.cout, 1, 1, cc.skip);
      for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += sk.v[i];
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += x.v[i];
    }
    return out;
  }

  Tensor res_backward(const ResSpec& r, const Tensor& gy, ResCache& cc,
                      Workspace& ws, S* grad) const {
    Tensor ga2 = nn::conv2d_bwd(gy, p(r.c2_w), g(grad, r.c2_w), g(grad, r.c2_b), 3,
                                1, cc.conv2);
    Tensor gpre2 = nn::silu_bwd(ga2, cc.pre2);
    Tensor gh = nn::groupnorm_bwd(gpre2, p(r.gn2_g), g(grad, r.gn2_g),
                                  g(grad, r.gn2_b), cc.gn2);

    // the time projection enters as a per-channel broadcast, so its gradient
    // is the channel sum
    const std::size_t plane = static_cast<std::size_t>(gh.h) * gh.w;
    std::vector<S> chansum(r.cout, S(0));
    for (int ci = 0; ci < r.cout; ++ci) {
      const S* src = gh.v.data() + ci * plane;
      S acc(0);
      for (std::size_t i = 0; i < plane; ++i) acc += src[i];
      chansum[ci] = acc;
    }
    std::vector<S> g_st_part = nn::linear_bwd(chansum, ws.st, p(r.tp_w),
                                              g(grad, r.tp_w), g(grad, r.tp_b));
    for (std::size_t i = 0; i < ws.g_st.size(); ++i) ws.g_st[i] += g_st_part[i];

    Tensor ga1 = nn::conv2d_bwd(gh, p(r.c1_w), g(grad, r.c1_w), g(grad, r.c1_b), 3,
                                1, cc.conv1);
    Tensor gpre1 = nn::silu_bwd(ga1, cc.pre1);
    Tensor gx = nn::groupnorm_bwd(gpre1, p(r.gn1_g), g(grad, r.gn1_g),
                                  g(grad, r.gn1_b), cc.gn1);
    if (r.has_skip) {
      Tensor gsk = nn::conv2d_bwd(gy, p(r.sk_w), g(grad, r.sk_w), g(grad, r.sk_b),
                                  1, 1, cc.skip);
      for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] += gsk.v[i];
    } else {
      for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] += gy.v[i];
    }
    return gx;
  }

  DenoiserConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<S> w_;
  std::vector<ParamBlock> blocks_;
  std::vector<Init> init_kind_;
  std::vector<std::size_t> fan_in_;

  std::size_t tm1_w_ = 0, tm1_b_ = 0, tm2_w_ = 0, tm2_b_ = 0;
  std::size_t stem_w_ = 0, stem_b_ = 0;
  std::vector<std::array<ResSpec, 2>> down_;
  std::vector<std::size_t> down_w_, down_b_;
  ResSpec mid0_, mid1_;
  std::vector<std::array<ResSpec, 2>> up_;
  std::vector<std::size_t> up_w_, up_b_;
  std::size_t head_gn_g_ = 0, head_gn_b_ = 0, head_w_ = 0, head_b_ = 0;
};

using Denoiser = UNet<float>;

// Predicted noise for one latent tensor; shape mirrors the input.
template <class S>
nn::Tensor3<S> denoiser_forward(const UNet<S>& m, const nn::Tensor3<S>& zt, int t) {
  return m.forward(zt, t);
}

}  // namespace hud
