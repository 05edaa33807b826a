#pragma once

#include <span>
#include <vector>

#include "pri/nn/tensor.hpp"

namespace pri::nn {

/// y = W x + b, W is (out x in).
inline std::vector<double> linear_forward(const Tensor& w, const Tensor* b, std::span<const double> x) {
  const std::size_t out = w.shape[0], in = w.shape[1];
  std::vector<double> y(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    double s = b ? (*b)[o] : 0.0;
    const double* row = w.data.data() + o * in;
    for (std::size_t k = 0; k < in; ++k) s += row[k] * x[k];
    y[o] = s;
  }
  return y;
}

/// Accumulates dW, db and returns dx.
inline std::vector<double> linear_backward(const Tensor& w, std::span<const double> x, std::span<const double> dy,
                                           Tensor& gw, Tensor* gb) {
  const std::size_t out = w.shape[0], in = w.shape[1];
  std::vector<double> dx(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy[o];
    if (gb) (*gb)[o] += g;
    if (g == 0.0) continue;
    const double* row = w.data.data() + o * in;
    double* grow = gw.data.data() + o * in;
    for (std::size_t k = 0; k < in; ++k) {
      grow[k] += g * x[k];
      dx[k] += g * row[k];
    }
  }
  return dx;
}

}  // namespace pri::nn
