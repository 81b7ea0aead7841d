#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hud::nn {

template <class S>
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<S> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, S(0)) {}

  std::size_t size() const { return v.size(); }
  S& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  S at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
};

template <class S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapRM = Eigen::Map<MatRM<S>>;
template <class S>
using CMapRM = Eigen::Map<const MatRM<S>>;

// ---------------------------------------------------------------------------
// conv2d, k x k kernel, padding k/2, stride 1 or 2
// W is row-major (cout, cin*k*k); y(ci,:) rows are the channel planes.
// ---------------------------------------------------------------------------

template <class S>
struct ConvCache {
  MatRM<S> cols;  // (cin*k*k) x (oh*ow)
  int cin = 0, hin = 0, win = 0, oh = 0, ow = 0;
};

template <class S>
void im2col(const Tensor3<S>& x, int k, int stride, MatRM<S>& cols, int oh, int ow) {
  const int pad = k / 2;
  cols.resize(static_cast<Eigen::Index>(x.c) * k * k, static_cast<Eigen::Index>(oh) * ow);
  for (int ci = 0; ci < x.c; ++ci) {
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        S* row = cols.data() + (static_cast<std::size_t>(ci) * k * k + dy * k + dx) *
                                   cols.cols();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + dy - pad;
          S* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= x.h) {
            for (int ox = 0; ox < ow; ++ox) dst[ox] = S(0);
            continue;
          }
          const S* src = &x.v[(static_cast<std::size_t>(ci) * x.h + iy) * x.w];
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + dx - pad;
            dst[ox] = (ix < 0 || ix >= x.w) ? S(0) : src[ix];
          }
        }
      }
    }
  }
}

template <class S>
Tensor3<S> conv2d_fwd(const Tensor3<S>& x, const S* w, const S* b, int cout, int k,
                      int stride, ConvCache<S>& cc) {
  const int pad = k / 2;
  const int oh = (x.h + 2 * pad - k) / stride + 1;
  const int ow = (x.w + 2 * pad - k) / stride + 1;
  cc.cin = x.c;
  cc.hin = x.h;
  cc.win = x.w;
  cc.oh = oh;
  cc.ow = ow;
  im2col(x, k, stride, cc.cols, oh, ow);

  Tensor3<S> y(cout, oh, ow);
  CMapRM<S> wm(w, cout, static_cast<Eigen::Index>(x.c) * k * k);
  MapRM<S> ym(y.v.data(), cout, static_cast<Eigen::Index>(oh) * ow);
  ym.noalias() = wm * cc.cols;
  for (int co = 0; co < cout; ++co) ym.row(co).array() += b[co];
  return y;
}

template <class S>
Tensor3<S> conv2d_bwd(const Tensor3<S>& gy, const S* w, S* gw, S* gb, int k,
                      int stride, const ConvCache<S>& cc) {
  const int pad = k / 2;
  const int cout = gy.c;
  const Eigen::Index kk = static_cast<Eigen::Index>(cc.cin) * k * k;
  const Eigen::Index q = static_cast<Eigen::Index>(cc.oh) * cc.ow;

  CMapRM<S> gym(gy.v.data(), cout, q);
  CMapRM<S> wm(w, cout, kk);
  MapRM<S> gwm(gw, cout, kk);
  gwm.noalias() += gym * cc.cols.transpose();
  // fixed-order reduction; SIMD redux would round differently depending on
  // the buffer's runtime alignment and break bitwise reproducibility
  for (int co = 0; co < cout; ++co) {
    const S* row = gy.v.data() + static_cast<std::size_t>(co) * q;
    S acc(0);
    for (Eigen::Index i = 0; i < q; ++i) acc += row[i];
    gb[co] += acc;
  }

  MatRM<S> gcols(kk, q);
  gcols.noalias() = wm.transpose() * gym;

  Tensor3<S> gx(cc.cin, cc.hin, cc.win);
  for (int ci = 0; ci < cc.cin; ++ci) {
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        const S* row = gcols.data() +
                       (static_cast<std::size_t>(ci) * k * k + dy * k + dx) * q;
        for (int oy = 0; oy < cc.oh; ++oy) {
          const int iy = oy * stride + dy - pad;
          if (iy < 0 || iy >= cc.hin) continue;
          S* dst = &gx.v[(static_cast<std::size_t>(ci) * cc.hin + iy) * cc.win];
          const S* src = row + static_cast<std::size_t>(oy) * cc.ow;
          for (int ox = 0; ox < cc.ow; ++ox) {
            const int ix = ox * stride + dx - pad;
            if (ix >= 0 && ix < cc.win) dst[ix] += src[ox];
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// group normalization over (channels/groups, h, w) per group; affine per
// channel. Statistics accumulate in double.
// ---------------------------------------------------------------------------

template <class S>
struct GnCache {
  Tensor3<S> x;
  std::vector<double> mean, invstd;  // per group
  int groups = 0;
};

template <class S>
Tensor3<S> groupnorm_fwd(const Tensor3<S>& x, const S* gamma, const S* beta,
                         int groups, GnCache<S>& cc) {
  const int cpg = x.c / groups;
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t m = cpg * plane;
  cc.x = x;
  cc.groups = groups;
  cc.mean.assign(groups, 0.0);
  cc.invstd.assign(groups, 0.0);

  Tensor3<S> y(x.c, x.h, x.w);
  for (int g = 0; g < groups; ++g) {
    const S* src = x.v.data() + static_cast<std::size_t>(g) * cpg * plane;
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = src[i];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / static_cast<double>(m);
    const double var = sq / static_cast<double>(m) - mean * mean;
    const double invstd = 1.0 / std::sqrt(var + 1e-5);
    cc.mean[g] = mean;
    cc.invstd[g] = invstd;
    for (int cl = 0; cl < cpg; ++cl) {
      const int ch = g * cpg + cl;
      const S* xs = x.v.data() + static_cast<std::size_t>(ch) * plane;
      S* ys = y.v.data() + static_cast<std::size_t>(ch) * plane;
      const double a = static_cast<double>(gamma[ch]) * invstd;
      const double b = static_cast<double>(beta[ch]) -
                       a * mean;
      for (std::size_t i = 0; i < plane; ++i)
        ys[i] = static_cast<S>(a * xs[i] + b);
    }
  }
  return y;
}

template <class S>
Tensor3<S> groupnorm_bwd(const Tensor3<S>& gy, const S* gamma, S* ggamma, S* gbeta,
                         const GnCache<S>& cc) {
  const Tensor3<S>& x = cc.x;
  const int groups = cc.groups;
  const int cpg = x.c / groups;
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
  const double m = static_cast<double>(cpg * plane);

  Tensor3<S> gx(x.c, x.h, x.w);
  for (int g = 0; g < groups; ++g) {
    const double mean = cc.mean[g];
    const double invstd = cc.invstd[g];
    double sum_gyg = 0.0;    // sum of gy*gamma
    double sum_gyg_xh = 0.0; // sum of gy*gamma*xhat
    for (int cl = 0; cl < cpg; ++cl) {
      const int ch = g * cpg + cl;
      const S* xs = x.v.data() + static_cast<std::size_t>(ch) * plane;
      const S* gs = gy.v.data() + static_cast<std::size_t>(ch) * plane;
      double dg = 0.0, db = 0.0;
      const double ga = gamma[ch];
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (static_cast<double>(xs[i]) - mean) * invstd;
        const double gv = gs[i];
        dg += gv * xh;
        db += gv;
        sum_gyg += gv * ga;
        sum_gyg_xh += gv * ga * xh;
      }
      ggamma[ch] += static_cast<S>(dg);
      gbeta[ch] += static_cast<S>(db);
    }
    const double c1 = sum_gyg / m;
    const double c2 = sum_gyg_xh / m;
    for (int cl = 0; cl < cpg; ++cl) {
      const int ch = g * cpg + cl;
      const S* xs = x.v.data() + static_cast<std::size_t>(ch) * plane;
      const S* gs = gy.v.data() + static_cast<std::size_t>(ch) * plane;
      S* gd = gx.v.data() + static_cast<std::size_t>(ch) * plane;
      const double ga = gamma[ch];
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (static_cast<double>(xs[i]) - mean) * invstd;
        gd[i] = static_cast<S>(invstd * (gs[i] * ga - c1 - xh * c2));
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// SiLU x*sigmoid(x)
// ---------------------------------------------------------------------------

template <class S>
S silu_scalar(S x) {
  const S s = S(1) / (S(1) + std::exp(-x));
  return x * s;
}

template <class S>
Tensor3<S> silu_fwd(const Tensor3<S>& x) {
  Tensor3<S> y(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) y.v[i] = silu_scalar(x.v[i]);
  return y;
}

// gy * d silu / dx evaluated at the cached input
template <class S>
Tensor3<S> silu_bwd(const Tensor3<S>& gy, const Tensor3<S>& x_in) {
  Tensor3<S> gx(gy.c, gy.h, gy.w);
  for (std::size_t i = 0; i < gy.size(); ++i) {
    const S s = S(1) / (S(1) + std::exp(-x_in.v[i]));
    gx.v[i] = gy.v[i] * (s * (S(1) + x_in.v[i] * (S(1) - s)));
  }
  return gx;
}

// ---------------------------------------------------------------------------
// dense layer on flat vectors, W row-major (out, in)
// ---------------------------------------------------------------------------

// the dense layers are small; plain loops keep every reduction in a fixed
// order independent of buffer alignment
template <class S>
std::vector<S> linear_fwd(const std::vector<S>& x, const S* w, const S* b, int out) {
  const int in = static_cast<int>(x.size());
  std::vector<S> y(out);
  for (int i = 0; i < out; ++i) {
    const S* row = w + static_cast<std::size_t>(i) * in;
    S acc = b[i];
    for (int j = 0; j < in; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

template <class S>
std::vector<S> linear_bwd(const std::vector<S>& gy, const std::vector<S>& x_in,
                          const S* w, S* gw, S* gb) {
  const int out = static_cast<int>(gy.size());
  const int in = static_cast<int>(x_in.size());
  std::vector<S> gx(in, S(0));
  for (int i = 0; i < out; ++i) {
    const S g = gy[i];
    const S* row = w + static_cast<std::size_t>(i) * in;
    S* grow = gw + static_cast<std::size_t>(i) * in;
    for (int j = 0; j < in; ++j) {
      grow[j] += g * x_in[j];
      gx[j] += row[j] * g;
    }
    gb[i] += g;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// nearest-neighbor 2x upsample
// ---------------------------------------------------------------------------

template <class S>
Tensor3<S> upsample2x_fwd(const Tensor3<S>& x) {
  Tensor3<S> y(x.c, x.h * 2, x.w * 2);
  for (int ci = 0; ci < x.c; ++ci)
    for (int yy = 0; yy < y.h; ++yy)
      for (int xx = 0; xx < y.w; ++xx)
        y.at(ci, yy, xx) = x.at(ci, yy / 2, xx / 2);
  return y;
}

template <class S>
Tensor3<S> upsample2x_bwd(const Tensor3<S>& gy) {
  Tensor3<S> gx(gy.c, gy.h / 2, gy.w / 2);
  for (int ci = 0; ci < gy.c; ++ci)
    for (int yy = 0; yy < gy.h; ++yy)
      for (int xx = 0; xx < gy.w; ++xx)
        gx.at(ci, yy / 2, xx / 2) += gy.at(ci, yy, xx);
  return gx;
}

template <class S>
Tensor3<S> concat_channels(const Tensor3<S>& a, const Tensor3<S>& b) {
  Tensor3<S> y(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.v.size());
  return y;
}

template <class S>
void split_channels(const Tensor3<S>& gy, Tensor3<S>& ga, Tensor3<S>& gb, int ca) {
  ga = Tensor3<S>(ca, gy.h, gy.w);
  gb = Tensor3<S>(gy.c - ca, gy.h, gy.w);
  std::copy(gy.v.begin(), gy.v.begin() + ga.v.size(), ga.v.begin());
  std::copy(gy.v.begin() + ga.v.size(), gy.v.end(), gb.v.begin());
}

}  // namespace hud::nn
