#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pri/numeric.hpp"

namespace pri::dsp {

/// Second-order section, direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

  /// Filters in place starting from the steady state for a constant input x[0].
  void apply(std::vector<double>& x) const {
    if (x.empty()) return;
    const double x0 = x.front();
    const double y0 = dc_gain() * x0;
    double z2 = b2 * x0 - a2 * y0;
    double z1 = b1 * x0 - a1 * y0 + z2;
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }
};

/// Butterworth (Q = 1/sqrt 2) low-pass section, RBJ bilinear design.
inline Biquad lowpass(double cutoff_hz, double rate) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate;
  const double alpha = std::sin(w0) / std::numbers::sqrt2;
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
}

inline Biquad highpass(double cutoff_hz, double rate) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate;
  const double alpha = std::sin(w0) / std::numbers::sqrt2;
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
}

/// Zero-phase filtering through a cascade of sections, with odd-reflection padding
/// of `pad` samples at each end (clamped to n-1).
inline std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
  for (const auto& s : sections) s.apply(ext);
  std::reverse(ext.begin(), ext.end());
  for (const auto& s : sections) s.apply(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline std::vector<double> bandpass_filtfilt(std::span<const double> x, double rate, double low_hz, double high_hz) {
  const Biquad sections[2] = {highpass(low_hz, rate), lowpass(high_hz, rate)};
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * rate / low_hz));
  return filtfilt(sections, x, pad);
}

inline std::vector<double> lowpass_filtfilt(std::span<const double> x, double rate, double cutoff_hz) {
  const Biquad sections[1] = {lowpass(cutoff_hz, rate)};
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * rate / cutoff_hz));
  return filtfilt(sections, x, pad);
}

/// Peak prominence: height above the higher of the two lowest points reachable on
/// each side before meeting a higher sample.
inline double prominence(std::span<const double> x, std::size_t peak) {
  const double h = x[peak];
  double left_min = h;
  for (std::size_t i = peak; i-- > 0;) {
    if (x[i] > h) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = h;
  for (std::size_t i = peak + 1; i < x.size(); ++i) {
    if (x[i] > h) break;
    right_min = std::min(right_min, x[i]);
  }
  return h - std::max(left_min, right_min);
}

/// Local maxima with prominence >= min_prominence, thinned so that no two kept
/// peaks are closer than min_distance samples (higher peaks win). Sorted by index.
inline std::vector<std::size_t> find_peaks(std::span<const double> x, std::size_t min_distance,
                                           double min_prominence) {
  std::vector<std::size_t> cand;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] > x[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] < x[i]) {
        cand.push_back((i + j) / 2);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  std::vector<std::size_t> prominent;
  for (auto p : cand) {
    if (prominence(x, p) >= min_prominence) prominent.push_back(p);
  }
  std::vector<std::size_t> by_height = prominent;
  std::stable_sort(by_height.begin(), by_height.end(), [&](auto a, auto b) { return x[a] > x[b]; });
  std::vector<std::size_t> kept;
  for (auto p : by_height) {
    bool clash = false;
    for (auto k : kept) {
      const std::size_t d = p > k ? p - k : k - p;
      if (d < min_distance) {
        clash = true;
        break;
      }
    }
    if (!clash) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// Sub-sample location of a peak by parabolic interpolation of its neighbors.
inline double refine_peak(std::span<const double> x, std::size_t p) {
  if (p == 0 || p + 1 >= x.size()) return static_cast<double>(p);
  const double a = x[p - 1], b = x[p], c = x[p + 1];
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0) return static_cast<double>(p);
  return static_cast<double>(p) + 0.5 * (a - c) / denom;
}

/// Removes the least-squares line.
inline std::vector<double> detrend(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(x.begin(), x.end());
  if (n < 2) {
    for (double& v : out) v = 0.0;
    return out;
  }
  const double tm = 0.5 * static_cast<double>(n - 1);
  const double ym = mean(x);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tm;
    sxy += dt * (x[i] - ym);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - ym - slope * (static_cast<double>(i) - tm);
  return out;
}

/// Hann-tapered power spectrum evaluated by direct DFT at the given frequencies.
inline std::vector<double> power_at(std::span<const double> x, double rate, std::span<const double> freqs) {
  const std::size_t n = x.size();
  std::vector<double> tapered(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = n > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                  static_cast<double>(n - 1))
                           : 1.0;
    tapered[i] = x[i] * w;
  }
  std::vector<double> out(freqs.size());
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * freqs[k] / rate;
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      re += tapered[i] * std::cos(w * static_cast<double>(i));
      im -= tapered[i] * std::sin(w * static_cast<double>(i));
    }
    out[k] = re * re + im * im;
  }
  return out;
}

}  // namespace pri::dsp
