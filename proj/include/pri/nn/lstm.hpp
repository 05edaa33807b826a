#pragma once

// Single LSTM layer, gate order (input, forget, cell, output).

#include <cmath>
#include <span>
#include <vector>

#include "pri/nn/tensor.hpp"

namespace pri::nn {

struct LstmWeights {
  const Tensor& wx;  // (4H, I)
  const Tensor& wh;  // (4H, H)
  const Tensor& b;   // (4H)
};

struct LstmGrads {
  Tensor& wx;
  Tensor& wh;
  Tensor& b;
};

struct LstmCache {
  std::size_t steps = 0, in = 0, hidden = 0;
  std::vector<double> x;      // steps * in
  std::vector<double> gates;  // steps * 4H, post-activation
  std::vector<double> c;      // (steps + 1) * H, c[0] = 0
  std::vector<double> h;      // (steps + 1) * H, h[0] = 0

  std::span<const double> h_at(std::size_t t) const { return {h.data() + (t + 1) * hidden, hidden}; }
};

/// x is steps * in, row per step. Returns the cache; outputs are cache.h_at(t).
inline LstmCache lstm_forward(const LstmWeights& w, std::span<const double> x, std::size_t steps) {
  LstmCache k;
  k.steps = steps;
  k.hidden = w.wh.shape[1];
  k.in = w.wx.shape[1];
  const std::size_t hd = k.hidden, in = k.in;
  k.x.assign(x.begin(), x.end());
  k.gates.assign(steps * 4 * hd, 0.0);
  k.c.assign((steps + 1) * hd, 0.0);
  k.h.assign((steps + 1) * hd, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* xt = k.x.data() + t * in;
    const double* hp = k.h.data() + t * hd;
    const double* cp = k.c.data() + t * hd;
    double* g = k.gates.data() + t * 4 * hd;
    for (std::size_t r = 0; r < 4 * hd; ++r) {
      double a = w.b[r];
      const double* wxr = w.wx.data.data() + r * in;
      for (std::size_t q = 0; q < in; ++q) a += wxr[q] * xt[q];
      const double* whr = w.wh.data.data() + r * hd;
      for (std::size_t q = 0; q < hd; ++q) a += whr[q] * hp[q];
      g[r] = (r >= 2 * hd && r < 3 * hd) ? std::tanh(a) : sigmoid(a);
    }
    double* ct = k.c.data() + (t + 1) * hd;
    double* ht = k.h.data() + (t + 1) * hd;
    for (std::size_t u = 0; u < hd; ++u) {
      ct[u] = g[hd + u] * cp[u] + g[u] * g[2 * hd + u];
      ht[u] = g[3 * hd + u] * std::tanh(ct[u]);
    }
  }
  return k;
}

/// dh is steps * H (gradient w.r.t. each h_t from above). Accumulates weight
/// gradients and returns dx (steps * in).
inline std::vector<double> lstm_backward(const LstmWeights& w, const LstmCache& k, std::span<const double> dh,
                                         LstmGrads g, bool want_dx = true) {
  const std::size_t hd = k.hidden, in = k.in;
  std::vector<double> dx(want_dx ? k.steps * in : 0, 0.0);
  std::vector<double> dh_next(hd, 0.0), dc_next(hd, 0.0), da(4 * hd);
  for (std::size_t tt = k.steps; tt-- > 0;) {
    const double* gate = k.gates.data() + tt * 4 * hd;
    const double* ct = k.c.data() + (tt + 1) * hd;
    const double* cp = k.c.data() + tt * hd;
    const double* hp = k.h.data() + tt * hd;
    const double* xt = k.x.data() + tt * in;
    for (std::size_t u = 0; u < hd; ++u) {
      const double i = gate[u], f = gate[hd + u], gg = gate[2 * hd + u], o = gate[3 * hd + u];
      const double dht = dh[tt * hd + u] + dh_next[u];
      const double tc = std::tanh(ct[u]);
      const double dc = dc_next[u] + dht * o * (1.0 - tc * tc);
      da[u] = dc * gg * i * (1.0 - i);
      da[hd + u] = dc * cp[u] * f * (1.0 - f);
      da[2 * hd + u] = dc * i * (1.0 - gg * gg);
      da[3 * hd + u] = dht * tc * o * (1.0 - o);
      dc_next[u] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < 4 * hd; ++r) {
      const double a = da[r];
      if (a == 0.0) continue;
      g.b[r] += a;
      double* gwx = g.wx.data.data() + r * in;
      const double* wxr = w.wx.data.data() + r * in;
      for (std::size_t q = 0; q < in; ++q) {
        gwx[q] += a * xt[q];
        if (want_dx) dx[tt * in + q] += a * wxr[q];
      }
      double* gwh = g.wh.data.data() + r * hd;
      const double* whr = w.wh.data.data() + r * hd;
      for (std::size_t q = 0; q < hd; ++q) {
        gwh[q] += a * hp[q];
        dh_next[q] += a * whr[q];
      }
    }
  }
  return dx;
}

}  // namespace pri::nn
