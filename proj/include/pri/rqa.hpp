#pragma once

// Phase-space embedding, binary recurrence matrices and the two RQA measures
// used for onset detection (recurrence rate and determinism).

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pri/error.hpp"
#include "pri/numeric.hpp"

namespace pri::rqa {

/// Row i = [x_i, x_{i+delay}, ..., x_{i+(dim-1)delay}].
inline Matrix embed_phase_space(std::span<const double> signal, std::size_t dim, std::size_t delay) {
  if (dim == 0 || delay == 0) throw ArgumentError("embed_phase_space: dim and delay must be positive");
  const std::size_t span = (dim - 1) * delay;
  if (signal.size() <= span) throw ArgumentError("embed_phase_space: signal too short for embedding");
  const std::size_t rows = signal.size() - span;
  Matrix out(rows, dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < dim; ++k) out(i, k) = signal[i + k * delay];
  }
  return out;
}

struct BinaryMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> cells;

  BinaryMatrix() = default;
  explicit BinaryMatrix(std::size_t size) : n(size), cells(size * size, 0) {}

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return cells[i * n + j]; }
  std::uint8_t& operator()(std::size_t i, std::size_t j) { return cells[i * n + j]; }
  bool operator==(const BinaryMatrix&) const = default;
};

/// R[i,j] = 1 iff the Euclidean distance between trajectory rows i and j is <= epsilon.
inline BinaryMatrix recurrence_matrix(const Matrix& trajectory, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("recurrence_matrix: epsilon must be positive");
  const std::size_t n = trajectory.rows;
  BinaryMatrix r(n);
  const double eps2 = epsilon * epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    r(i, i) = 1;
    const auto a = trajectory.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = trajectory.row(j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
      const std::uint8_t v = d2 <= eps2 ? 1 : 0;
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

struct RqaMeasures {
  double recurrence_rate = 0.0;
  double determinism = 0.0;
};

/// RR over off-diagonal cells; DET = share of off-diagonal recurrent points lying on
/// diagonal lines (parallel to the main diagonal) of length >= min_line.
inline RqaMeasures rqa_measures(const BinaryMatrix& r, std::size_t min_line = 2) {
  const std::size_t n = r.n;
  if (n < 2) return {};
  std::size_t recurrent = 0;
  std::size_t on_lines = 0;
  for (std::size_t d = 1; d < n; ++d) {
    for (int side = 0; side < 2; ++side) {
      std::size_t run = 0;
      for (std::size_t k = 0; k + d < n; ++k) {
        const bool hit = side == 0 ? r(k, k + d) : r(k + d, k);
        if (hit) {
          ++run;
          ++recurrent;
        } else {
          if (run >= min_line) on_lines += run;
          run = 0;
        }
      }
      if (run >= min_line) on_lines += run;
    }
  }
  RqaMeasures m;
  m.recurrence_rate = static_cast<double>(recurrent) / static_cast<double>(n * (n - 1));
  m.determinism = recurrent ? static_cast<double>(on_lines) / static_cast<double>(recurrent) : 0.0;
  return m;
}

}  // namespace pri::rqa
