#pragma once

// 3x3 (or k x k) convolution over channel-first (C, H, W) buffers with zero padding.

#include <span>
#include <vector>

#include "pri/nn/tensor.hpp"

namespace pri::nn {

struct ConvShape {
  std::size_t in_c = 0, out_c = 0, kernel = 3, stride = 2, pad = 1;
  std::size_t in_h = 0, in_w = 0;

  std::size_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
};

/// w is (out_c, in_c, k, k), b is (out_c).
inline std::vector<double> conv2d_forward(const Tensor& w, const Tensor& b, std::span<const double> in,
                                          const ConvShape& s) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  std::vector<double> out(s.out_c * oh * ow);
  for (std::size_t o = 0; o < s.out_c; ++o) {
    double* dst = out.data() + o * oh * ow;
    std::fill(dst, dst + oh * ow, b[o]);
    for (std::size_t c = 0; c < s.in_c; ++c) {
      const double* src = in.data() + c * s.in_h * s.in_w;
      const double* ker = w.data.data() + ((o * s.in_c + c) * k) * k;
      for (std::size_t ki = 0; ki < k; ++ki) {
        for (std::size_t kj = 0; kj < k; ++kj) {
          const double wv = ker[ki * k + kj];
          for (std::size_t i = 0; i < oh; ++i) {
            const auto r = static_cast<std::ptrdiff_t>(i * s.stride + ki) - static_cast<std::ptrdiff_t>(s.pad);
            if (r < 0 || r >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
            const double* srow = src + static_cast<std::size_t>(r) * s.in_w;
            double* drow = dst + i * ow;
            for (std::size_t j = 0; j < ow; ++j) {
              const auto q = static_cast<std::ptrdiff_t>(j * s.stride + kj) - static_cast<std::ptrdiff_t>(s.pad);
              if (q < 0 || q >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
              drow[j] += wv * srow[q];
            }
          }
        }
      }
    }
  }
  return out;
}

/// Accumulates dW, db; returns d(input) when want_dx.
inline std::vector<double> conv2d_backward(const Tensor& w, std::span<const double> in, std::span<const double> dout,
                                           const ConvShape& s, Tensor& gw, Tensor& gb, bool want_dx = true) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  std::vector<double> din(want_dx ? s.in_c * s.in_h * s.in_w : 0, 0.0);
  for (std::size_t o = 0; o < s.out_c; ++o) {
    const double* d = dout.data() + o * oh * ow;
    double sb = 0.0;
    for (std::size_t t = 0; t < oh * ow; ++t) sb += d[t];
    gb[o] += sb;
    for (std::size_t c = 0; c < s.in_c; ++c) {
      const double* src = in.data() + c * s.in_h * s.in_w;
      double* dsrc = want_dx ? din.data() + c * s.in_h * s.in_w : nullptr;
      const std::size_t base = ((o * s.in_c + c) * k) * k;
      for (std::size_t ki = 0; ki < k; ++ki) {
        for (std::size_t kj = 0; kj < k; ++kj) {
          const double wv = w[base + ki * k + kj];
          double gsum = 0.0;
          for (std::size_t i = 0; i < oh; ++i) {
            const auto r = static_cast<std::ptrdiff_t>(i * s.stride + ki) - static_cast<std::ptrdiff_t>(s.pad);
            if (r < 0 || r >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
            const std::size_t roff = static_cast<std::size_t>(r) * s.in_w;
            for (std::size_t j = 0; j < ow; ++j) {
              const auto q = static_cast<std::ptrdiff_t>(j * s.stride + kj) - static_cast<std::ptrdiff_t>(s.pad);
              if (q < 0 || q >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
              const double g = d[i * ow + j];
              gsum += g * src[roff + static_cast<std::size_t>(q)];
              if (dsrc) dsrc[roff + static_cast<std::size_t>(q)] += g * wv;
            }
          }
          gw[base + ki * k + kj] += gsum;
        }
      }
    }
  }
  return din;
}

}  // namespace pri::nn
