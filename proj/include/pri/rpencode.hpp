#pragma once

// Three-axis ACC window -> one RGB image of unthresholded recurrence plots
// (x -> R, y -> G, z -> B), jointly normalized so relative axis energy survives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pri/error.hpp"
#include "pri/gesture_types.hpp"
#include "pri/numeric.hpp"
#include "pri/png.hpp"

namespace pri::rpencode {

inline constexpr std::size_t kDefaultSide = 64;

/// Channel-first image: pixel(c, i, j) = pixels[(c * side + i) * side + j].
struct AccImage {
  std::size_t side = 0;
  std::vector<double> pixels;
  std::optional<GestureWindow> source_window;

  double operator()(std::size_t c, std::size_t i, std::size_t j) const { return pixels[(c * side + i) * side + j]; }
  std::span<const double> channel(std::size_t c) const { return {pixels.data() + c * side * side, side * side}; }
};

/// M[i,j] = |x_i - x_j|.
inline Matrix rp_channel(std::span<const double> x) {
  if (x.size() < 2) throw ArgumentError("rp_channel: need at least 2 samples");
  const std::size_t n = x.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(x[i] - x[j]);
      m(i, j) = d;
      m(j, i) = d;
    }
  }
  return m;
}

/// Align-corners bilinear resize of a square matrix; identity when side == n.
inline Matrix resize_bilinear(const Matrix& src, std::size_t side) {
  if (side == 0) throw ArgumentError("resize_bilinear: side must be positive");
  const std::size_t n = src.rows;
  if (side == n) return src;
  Matrix out(side, side);
  const double scale = side > 1 ? static_cast<double>(n - 1) / static_cast<double>(side - 1) : 0.0;
  for (std::size_t i = 0; i < side; ++i) {
    const double u = static_cast<double>(i) * scale;
    const auto i0 = std::min(static_cast<std::size_t>(u), n - 1);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double fu = u - static_cast<double>(i0);
    for (std::size_t j = 0; j < side; ++j) {
      const double v = static_cast<double>(j) * scale;
      const auto j0 = std::min(static_cast<std::size_t>(v), n - 1);
      const std::size_t j1 = std::min(j0 + 1, n - 1);
      const double fv = v - static_cast<double>(j0);
      out(i, j) = (1 - fu) * ((1 - fv) * src(i0, j0) + fv * src(i0, j1)) +
                  fu * ((1 - fv) * src(i1, j0) + fv * src(i1, j1));
    }
  }
  return out;
}

inline AccImage encode_acc_image(std::span<const double> x, std::span<const double> y, std::span<const double> z,
                                 std::size_t side = kDefaultSide) {
  if (x.size() != y.size() || x.size() != z.size()) throw ArgumentError("encode_acc_image: axes differ in length");
  if (side == 0) throw ArgumentError("encode_acc_image: side must be positive");
  const Matrix rp[3] = {rp_channel(x), rp_channel(y), rp_channel(z)};
  double peak = 0.0;
  for (const auto& m : rp) {
    for (double v : m.data) peak = std::max(peak, v);
  }
  AccImage img;
  img.side = side;
  img.pixels.assign(3 * side * side, 0.0);
  if (peak == 0.0) return img;
  for (std::size_t c = 0; c < 3; ++c) {
    Matrix m = rp[c];
    for (double& v : m.data) v /= peak;
    const Matrix r = resize_bilinear(m, side);
    for (std::size_t k = 0; k < side * side; ++k) img.pixels[c * side * side + k] = std::clamp(r.data[k], 0.0, 1.0);
  }
  return img;
}

/// 8-bit RGB PNG of the image.
inline void write_png(const AccImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> rgb(img.side * img.side * 3);
  for (std::size_t i = 0; i < img.side; ++i) {
    for (std::size_t j = 0; j < img.side; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        rgb[(i * img.side + j) * 3 + c] = static_cast<std::uint8_t>(std::lround(255.0 * img(c, i, j)));
      }
    }
  }
  png::write_rgb(path, img.side, img.side, rgb);
}

}  // namespace pri::rpencode
