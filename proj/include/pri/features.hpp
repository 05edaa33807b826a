#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "pri/error.hpp"
#include "pri/ingest.hpp"
#include "pri/numeric.hpp"

namespace pri::gesture {

/// Three equal-length acceleration axes.
struct AccView {
  std::span<const double> x, y, z;

  std::size_t size() const { return x.size(); }
  std::span<const double> axis(int a) const { return a == 0 ? x : (a == 1 ? y : z); }
  AccView sub(std::size_t start, std::size_t len) const {
    return {x.subspan(start, len), y.subspan(start, len), z.subspan(start, len)};
  }
};

inline AccView acc_view(const ingest::SensorRecording& rec) {
  return {rec.acc_x().values, rec.acc_y().values, rec.acc_z().values};
}

/// Descriptive statistics of a scalar series. Variance is the population variance;
/// kurtosis is excess kurtosis. Zero-variance input gives skewness = kurtosis = 0.
struct SeriesStats {
  double mean = 0, rms = 0, median = 0, variance = 0, sd = 0, skewness = 0, kurtosis = 0;
};

inline SeriesStats series_stats(std::span<const double> x) {
  SeriesStats s;
  if (x.empty()) return s;
  s.mean = pri::mean(x);
  s.rms = pri::rms(x);
  s.median = pri::median(x);
  s.variance = pri::variance(x);
  s.sd = std::sqrt(s.variance);
  if (s.variance > 0.0) {
    double m3 = 0.0, m4 = 0.0;
    for (double v : x) {
      const double d = v - s.mean;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    const auto n = static_cast<double>(x.size());
    m3 /= n;
    m4 /= n;
    s.skewness = m3 / std::pow(s.variance, 1.5);
    s.kurtosis = m4 / (s.variance * s.variance) - 3.0;
  }
  return s;
}

inline constexpr std::size_t kNumStatFeatures = 12;

inline std::size_t feature_dimension(std::size_t resample_len_per_axis) {
  return kNumStatFeatures + 3 * resample_len_per_axis;
}

/// Feature layout:
///   [0..6]   mean, RMS, median, variance, SD, skewness, kurtosis of the dynamic
///            acceleration magnitude |a_t - mean(a)|
///   [7]      angular-velocity proxy: mean magnitude of the sample-to-sample jerk
///   [8]      mean raw acceleration magnitude
///   [9..11]  per-axis jerk RMS (x, y, z)
///   then x, y, z each resampled to resample_len_per_axis samples.
/// The E4 carries no gyroscope or magnetometer; jerk stands in for angular velocity.
inline std::vector<double> extract_features(const AccView& w, std::size_t resample_len_per_axis = 40) {
  const std::size_t n = w.size();
  if (n == 0) throw ArgumentError("extract_features: empty window");
  if (w.y.size() != n || w.z.size() != n) throw ArgumentError("extract_features: axes differ in length");
  if (resample_len_per_axis < 2) throw ArgumentError("extract_features: resample length must be >= 2");

  std::array<double, 3> centre{};
  for (int a = 0; a < 3; ++a) centre[a] = pri::mean(w.axis(a));
  std::vector<double> dyn(n), raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0, r2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double v = w.axis(a)[i];
      d2 += (v - centre[a]) * (v - centre[a]);
      r2 += v * v;
    }
    dyn[i] = std::sqrt(d2);
    raw[i] = std::sqrt(r2);
  }
  std::vector<double> out;
  out.reserve(feature_dimension(resample_len_per_axis));
  const auto st = series_stats(dyn);
  out.insert(out.end(), {st.mean, st.rms, st.median, st.variance, st.sd, st.skewness, st.kurtosis});

  double jerk_mag = 0.0;
  std::array<double, 3> jerk_sq{};
  for (std::size_t i = 1; i < n; ++i) {
    double j2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = w.axis(a)[i] - w.axis(a)[i - 1];
      j2 += d * d;
      jerk_sq[a] += d * d;
    }
    jerk_mag += std::sqrt(j2);
  }
  const double steps = n > 1 ? static_cast<double>(n - 1) : 1.0;
  out.push_back(jerk_mag / steps);
  out.push_back(pri::mean(raw));
  for (int a = 0; a < 3; ++a) out.push_back(std::sqrt(jerk_sq[a] / steps));

  for (int a = 0; a < 3; ++a) {
    const auto axis = w.axis(a);
    if (axis.size() == 1) {
      out.insert(out.end(), resample_len_per_axis, axis[0]);
    } else {
      const auto r = ingest::resample(axis, resample_len_per_axis);
      out.insert(out.end(), r.begin(), r.end());
    }
  }
  return out;
}

}  // namespace pri::gesture
