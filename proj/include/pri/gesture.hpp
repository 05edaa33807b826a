#pragma once

// Gesture onset detection (windowed RQA on the dynamic acceleration magnitude),
// 12-class RBF SVM classification and localization.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pri/error.hpp"
#include "pri/features.hpp"
#include "pri/gesture_types.hpp"
#include "pri/ingest.hpp"
#include "pri/numeric.hpp"
#include "pri/rqa.hpp"
#include "pri/svm.hpp"

namespace pri::gesture {

namespace fs = std::filesystem;

/// Which DET transition marks an onset.
/// Rise: DET goes from below threshold to at-or-above (rest is noise-like, low DET).
/// Drop: DET goes from at-or-above to below.
enum class OnsetTransition { Rise, Drop };

struct RqaParams {
  std::size_t embed_dim = 3;
  std::size_t delay = 4;
  double epsilon_factor = 0.2;  // epsilon = factor * SD of the windowed magnitude
  std::size_t window = 80;
  double overlap = 0.8;
  double det_threshold = 0.25;
  OnsetTransition transition = OnsetTransition::Rise;
  double rate = 32.0;
  double gravity_window_s = 10.0;
  /// Windows whose magnitude SD (in g) is below this are quiescent whatever their DET.
  double min_activity = 0.05;
  /// Onset refinement: first run of `refine_run` samples above median + k * robust SD of the
  /// preceding rest window (with min_activity as the floor on k * SD).
  double refine_k = 5.0;
  std::size_t refine_run = 3;

  std::size_t hop() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(window) * (1.0 - overlap))));
  }

  void validate() const {
    if (embed_dim == 0 || delay == 0) throw ConfigError("rqa: embed_dim and delay must be positive");
    if (window < embed_dim * delay) throw ConfigError("rqa: window must be >= embed_dim * delay");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("rqa: overlap must lie in [0,1)");
    if (!(epsilon_factor > 0.0)) throw ConfigError("rqa: epsilon_factor must be positive");
    if (!(det_threshold >= 0.0 && det_threshold <= 1.0)) throw ConfigError("rqa: det_threshold must lie in [0,1]");
    if (!(rate > 0.0)) throw ConfigError("rqa: rate must be positive");
    if (!(gravity_window_s > 0.0)) throw ConfigError("rqa: gravity_window_s must be positive");
    if (!(min_activity >= 0.0)) throw ConfigError("rqa: min_activity must be nonnegative");
  }
};

/// |a_t - g_t| with g a centred moving average of each axis (the gravity estimate).
inline std::vector<double> dynamic_magnitude(const AccView& acc, double rate, double gravity_window_s) {
  const std::size_t n = acc.size();
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(gravity_window_s * rate)));
  std::vector<double> out(n, 0.0);
  for (int a = 0; a < 3; ++a) {
    const auto g = moving_average(acc.axis(a), width);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = acc.axis(a)[i] - g[i];
      out[i] += d * d;
    }
  }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

/// DET of one window of a scalar series under params (embedding, epsilon rule).
inline double window_determinism(std::span<const double> w, const RqaParams& p) {
  const double sd = stddev(w);
  const double eps = std::max(p.epsilon_factor * sd, 1e-12);
  const auto traj = rqa::embed_phase_space(w, p.embed_dim, p.delay);
  return rqa::rqa_measures(rqa::recurrence_matrix(traj, eps)).determinism;
}

struct WindowTrace {
  std::vector<std::size_t> starts;
  std::vector<double> det;
  std::vector<bool> active;
};

inline WindowTrace determinism_trace(std::span<const double> magnitude, const RqaParams& p) {
  WindowTrace t;
  const std::size_t hop = p.hop();
  for (std::size_t s = 0; s + p.window <= magnitude.size(); s += hop) {
    const auto w = magnitude.subspan(s, p.window);
    t.starts.push_back(s);
    t.det.push_back(window_determinism(w, p));
    t.active.push_back(stddev(w) >= p.min_activity);
  }
  return t;
}

namespace detail {

inline std::size_t refine_onset(std::span<const double> mag, std::size_t window_start, const RqaParams& p) {
  const std::size_t ref_lo = window_start >= p.window ? window_start - p.window : 0;
  std::size_t search_lo = window_start >= p.hop() ? window_start - p.hop() : 0;
  const std::size_t search_hi = std::min(mag.size(), window_start + p.window);
  if (ref_lo >= window_start) return window_start;
  std::vector<double> ref(mag.begin() + static_cast<std::ptrdiff_t>(ref_lo),
                          mag.begin() + static_cast<std::ptrdiff_t>(window_start));
  const double med = median(std::span<const double>(ref));
  for (double& v : ref) v = std::abs(v - med);
  const double robust_sd = 1.4826 * median(std::span<const double>(ref));
  const double threshold = med + std::max(p.refine_k * robust_sd, p.min_activity);
  search_lo = std::max(search_lo, ref_lo);
  std::size_t run = 0;
  for (std::size_t i = search_lo; i < search_hi; ++i) {
    run = mag[i] > threshold ? run + 1 : 0;
    if (run >= p.refine_run) return i + 1 - run;
  }
  return window_start;
}

}  // namespace detail

/// Candidate gesture start indices (ACC samples), ascending.
inline std::vector<std::size_t> detect_gesture_onsets(const AccView& acc, const RqaParams& p = {}) {
  p.validate();
  std::vector<std::size_t> onsets;
  if (acc.size() < p.window) return onsets;
  const auto mag = dynamic_magnitude(acc, p.rate, p.gravity_window_s);
  const auto trace = determinism_trace(mag, p);
  const bool rise = p.transition == OnsetTransition::Rise;
  auto gestural = [&](std::size_t k) {
    if (!trace.active[k]) return false;
    return rise ? trace.det[k] >= p.det_threshold : trace.det[k] < p.det_threshold;
  };
  bool prev = true;  // a stream starting mid-gesture gives no onset
  for (std::size_t k = 0; k < trace.starts.size(); ++k) {
    const bool now = gestural(k);
    if (now && !prev) {
      const std::size_t onset = detail::refine_onset(mag, trace.starts[k], p);
      if (onsets.empty() || onset >= onsets.back() + p.window) onsets.push_back(onset);
    }
    prev = now;
  }
  return onsets;
}

// ---------------------------------------------------------------------------
// Classification

struct LabeledWindow {
  std::vector<double> features;
  GestureClass label = GestureClass::Up;
};

struct GestureModel {
  svm::OvrModel svm;
  std::size_t resample_len = 40;
  std::size_t window = 80;

  std::pair<GestureClass, double> classify(std::span<const double> features) const {
    const auto [label, conf] = svm.predict(features);
    return {kAllGestures[static_cast<std::size_t>(label)], conf};
  }
};

struct GestureTrainOptions {
  std::size_t resample_len = 40;
  std::size_t window = 80;
  std::vector<int> augment_shifts{-8, -4, 0, 4, 8};
  svm::TrainOptions svm;
};

/// Identical (features, label) pairs collapse to one; conflicting labels are kept once each.
inline GestureModel train_gesture_svm(std::vector<LabeledWindow> windows, const GestureTrainOptions& opt = {}) {
  if (windows.empty()) throw TrainingError("train_gesture_svm: no labeled windows");
  std::sort(windows.begin(), windows.end(), [](const LabeledWindow& a, const LabeledWindow& b) {
    if (a.label != b.label) return a.label < b.label;
    return a.features < b.features;
  });
  windows.erase(std::unique(windows.begin(), windows.end(),
                            [](const LabeledWindow& a, const LabeledWindow& b) {
                              return a.label == b.label && a.features == b.features;
                            }),
                windows.end());
  const std::size_t dim = windows.front().features.size();
  Matrix x(windows.size(), dim);
  std::vector<int> y(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].features.size() != dim) throw ArgumentError("train_gesture_svm: feature dimensions differ");
    for (double v : windows[i].features) {
      if (!std::isfinite(v)) throw ArgumentError("train_gesture_svm: non-finite feature");
    }
    std::copy(windows[i].features.begin(), windows[i].features.end(), x.row(i).begin());
    y[i] = static_cast<int>(index_of(windows[i].label));
  }
  GestureModel model;
  model.resample_len = opt.resample_len;
  model.window = opt.window;
  try {
    model.svm = svm::train_ovr_svm(x, y, opt.svm);
  } catch (const InsufficientDataError& e) {
    throw TrainingError(e.what());
  }
  return model;
}

/// Feature window [start, start + window) clipped to the stream.
inline std::vector<double> window_features(const AccView& acc, std::size_t start, std::size_t window,
                                           std::size_t resample_len) {
  if (start >= acc.size()) throw ArgumentError("window_features: start beyond stream");
  const std::size_t len = std::min(window, acc.size() - start);
  return extract_features(acc.sub(start, len), resample_len);
}

/// Training windows from ground truth, each replicated at the given start shifts.
inline std::vector<LabeledWindow> labeled_windows(const AccView& acc, const std::vector<GestureWindow>& truth,
                                                  const GestureTrainOptions& opt = {}) {
  std::vector<LabeledWindow> out;
  for (const auto& w : truth) {
    for (int shift : opt.augment_shifts) {
      const auto s = static_cast<std::ptrdiff_t>(w.start) + shift;
      if (s < 0 || static_cast<std::size_t>(s) + opt.window > acc.size()) continue;
      out.push_back({window_features(acc, static_cast<std::size_t>(s), opt.window, opt.resample_len), w.label});
    }
  }
  return out;
}

/// Detected, classified gesture windows in temporal order; low-confidence windows dropped.
inline std::vector<GestureWindow> localize_gestures(const AccView& acc, const GestureModel& model,
                                                    const RqaParams& params = {}, double confidence_threshold = 0.5) {
  std::vector<GestureWindow> out;
  for (std::size_t onset : detect_gesture_onsets(acc, params)) {
    const auto f = window_features(acc, onset, model.window, model.resample_len);
    const auto [label, conf] = model.classify(f);
    if (conf < confidence_threshold) continue;
    out.push_back({onset, std::min(acc.size(), onset + model.window), label, conf});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kGestureModelVersion = 1;

inline nlohmann::json model_to_json(const GestureModel& m) {
  nlohmann::json j;
  j["format"] = "pri-gesture-model";
  j["version"] = kGestureModelVersion;
  j["resample_len"] = m.resample_len;
  j["window"] = m.window;
  j["C"] = m.svm.c;
  j["gamma"] = m.svm.gamma;
  j["temperature"] = m.svm.temperature;
  auto classes = nlohmann::json::array();
  for (int c : m.svm.classes) classes.push_back(std::string(to_string(kAllGestures[static_cast<std::size_t>(c)])));
  j["classes"] = classes;
  j["scaler"] = {{"mean", m.svm.scaler.mean}, {"scale", m.svm.scaler.scale}};
  j["support"] = {{"rows", m.svm.support.rows}, {"cols", m.svm.support.cols}, {"data", m.svm.support.data}};
  j["coef"] = m.svm.coef;
  j["rho"] = m.svm.rho;
  return j;
}

inline GestureModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "pri-gesture-model") throw FormatError("not a gesture model");
    if (j.at("version").get<int>() != kGestureModelVersion) throw FormatError("unsupported gesture model version");
    GestureModel m;
    m.resample_len = j.at("resample_len").get<std::size_t>();
    m.window = j.at("window").get<std::size_t>();
    m.svm.c = j.at("C").get<double>();
    m.svm.gamma = j.at("gamma").get<double>();
    m.svm.temperature = j.at("temperature").get<double>();
    for (const auto& name : j.at("classes")) {
      const auto g = parse_gesture(name.get<std::string>());
      if (!g) throw FormatError("unknown gesture class in model");
      m.svm.classes.push_back(static_cast<int>(index_of(*g)));
    }
    m.svm.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.svm.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
    const auto& s = j.at("support");
    m.svm.support.rows = s.at("rows").get<std::size_t>();
    m.svm.support.cols = s.at("cols").get<std::size_t>();
    m.svm.support.data = s.at("data").get<std::vector<double>>();
    m.svm.coef = j.at("coef").get<std::vector<std::vector<double>>>();
    m.svm.rho = j.at("rho").get<std::vector<double>>();
    if (m.svm.support.data.size() != m.svm.support.rows * m.svm.support.cols ||
        m.svm.coef.size() != m.svm.classes.size() || m.svm.rho.size() != m.svm.classes.size() ||
        m.svm.scaler.mean.size() != m.svm.support.cols) {
      throw FormatError("gesture model arrays are inconsistent");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("gesture model: ") + e.what());
  }
}

inline void save_model(const GestureModel& m, const fs::path& path) {
  ingest::detail::write_file(path, model_to_json(m).dump(1) + "\n");
}

inline GestureModel load_model(const fs::path& path) {
  return model_from_json(nlohmann::json::parse(ingest::detail::read_file(path)));
}

}  // namespace pri::gesture
