#pragma once

// Pipeline configuration: a JSON document validated before any work. Unknown keys are
// rejected at every level; errors name the offending key path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pri/error.hpp"
#include "pri/experiment.hpp"
#include "pri/gesture.hpp"
#include "pri/ingest.hpp"
#include "pri/mmsnn.hpp"
#include "pri/synth.hpp"

namespace pri::config {

namespace fs = std::filesystem;
using nlohmann::json;

enum class WindowSource { Truth, Detected };

struct DatasetSpec {
  std::string name;
  std::optional<synth::SynthConfig> synth;  // generated under <output_dir>/data/<name>
  fs::path path;                            // otherwise an existing dataset root
  ingest::DatasetFormat format = ingest::DatasetFormat::Generic;
};

struct GestureSection {
  gesture::RqaParams rqa;
  gesture::GestureTrainOptions train;
  double min_confidence = 0.5;
  std::size_t match_tolerance = 16;  // onset error (samples) for a detection to count as a hit
  fs::path model_path;               // pre-trained classifier for unlabeled data
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  fs::path output_dir = "out";
  std::vector<DatasetSpec> datasets;
  GestureSection gesture;
  attack::ExperimentConfig experiment;
  std::vector<std::size_t> curve_grid{10, 25, 50, 100};
  physio::SignalKind curve_signal = physio::SignalKind::Hr;
  WindowSource windows = WindowSource::Truth;
  json source;  // the validated document, for hashing

  fs::path data_dir(const DatasetSpec& d) const { return d.synth ? output_dir / "data" / d.name : d.path; }
};

namespace detail {

/// Reads the members of one object, recording which were seen.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void opt(const std::string& key, T& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <typename T>
  T get(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + where(key) + "'");
    const json& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("'" + where(key) + "' must be a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError("'" + where(key) + "' must be an integer");
        if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError("'" + where(key) + "' must be nonnegative");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("'" + where(key) + "' must be a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("'" + where(key) + "' must be a string");
      }
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + where(key) + "' has the wrong type");
    }
  }

  /// Throws naming the first unknown key.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + where(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
std::vector<T> list(Reader& r, const std::string& key, bool allow_empty = false) {
  const json& v = r.raw(key);
  if (!v.is_array()) throw ConfigError("'" + r.where(key) + "' must be an array");
  std::vector<T> out;
  for (const auto& e : v) {
    if constexpr (std::is_same_v<T, double>) {
      if (!e.is_number()) throw ConfigError("'" + r.where(key) + "' must hold numbers");
    } else if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer() || (std::is_unsigned_v<T> && !e.is_number_unsigned() && e.get<std::int64_t>() < 0)) {
        throw ConfigError("'" + r.where(key) + "' must hold " + (std::is_unsigned_v<T> ? "nonnegative " : "") + "integers");
      }
    } else {
      if (!e.is_string()) throw ConfigError("'" + r.where(key) + "' must hold strings");
    }
    out.push_back(e.get<T>());
  }
  if (out.empty() && !allow_empty) throw ConfigError("'" + r.where(key) + "' must not be empty");
  return out;
}

inline physio::SignalKind signal_kind(const std::string& s, const std::string& where) {
  auto k = physio::parse_signal_kind(s);
  if (!k) throw ConfigError("'" + where + "': unknown signal kind '" + s + "'");
  return *k;
}

inline GestureClass gesture_class(const std::string& s, const std::string& where) {
  for (auto g : kAllGestures) {
    if (to_string(g) == s) return g;
  }
  throw ConfigError("'" + where + "': unknown gesture class '" + s + "'");
}

inline synth::SynthConfig read_synth(const json& j, const std::string& path, std::uint64_t seed) {
  Reader r(j, path);
  synth::SynthConfig c;
  c.seed = seed;
  r.opt("n_subjects", c.n_subjects);
  r.opt("n_sessions", c.n_sessions);
  r.opt("gestures_per_session", c.gestures_per_session);
  r.opt("identity_separation", c.identity_separation);
  r.opt("noise_sd", c.noise_sd);
  r.opt("seed", c.seed);
  if (r.has("gesture_classes")) {
    c.gesture_classes.clear();
    for (const auto& s : list<std::string>(r, "gesture_classes")) c.gesture_classes.push_back(gesture_class(s, r.where("gesture_classes")));
  }
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

inline void read_gesture(const json& j, GestureSection& g) {
  Reader r(j, "gesture");
  auto& p = g.rqa;
  r.opt("embed_dim", p.embed_dim);
  r.opt("delay", p.delay);
  r.opt("epsilon_factor", p.epsilon_factor);
  r.opt("window", p.window);
  r.opt("overlap", p.overlap);
  r.opt("det_threshold", p.det_threshold);
  if (r.has("transition")) {
    const auto t = r.get<std::string>("transition");
    if (t == "rise") p.transition = gesture::OnsetTransition::Rise;
    else if (t == "drop") p.transition = gesture::OnsetTransition::Drop;
    else throw ConfigError("'gesture.transition' must be \"rise\" or \"drop\"");
  }
  r.opt("rate", p.rate);
  r.opt("gravity_window_s", p.gravity_window_s);
  r.opt("min_activity", p.min_activity);
  r.opt("refine_k", p.refine_k);
  r.opt("refine_run", p.refine_run);
  r.opt("resample_len", g.train.resample_len);
  if (r.has("augment_shifts")) g.train.augment_shifts = list<int>(r, "augment_shifts");
  r.opt("min_confidence", g.min_confidence);
  r.opt("match_tolerance", g.match_tolerance);
  if (r.has("model_path")) g.model_path = r.get<std::string>("model_path");
  if (r.has("svm")) {
    Reader s(r.raw("svm"), "gesture.svm");
    if (s.has("c_grid")) g.train.svm.c_grid = list<double>(s, "c_grid");
    if (s.has("gamma_factors")) g.train.svm.gamma_factors = list<double>(s, "gamma_factors");
    s.opt("folds", g.train.svm.folds);
    s.finish();
    for (double c : g.train.svm.c_grid) {
      if (!(c > 0.0)) throw ConfigError("'gesture.svm.c_grid' values must be positive");
    }
    for (double v : g.train.svm.gamma_factors) {
      if (!(v > 0.0)) throw ConfigError("'gesture.svm.gamma_factors' values must be positive");
    }
    if (g.train.svm.folds < 2) throw ConfigError("'gesture.svm.folds' must be >= 2");
  }
  r.finish();
  p.validate();
  g.train.window = p.window;
  if (g.train.resample_len < 2) throw ConfigError("'gesture.resample_len' must be >= 2");
  if (!(g.min_confidence >= 0.0 && g.min_confidence <= 1.0)) throw ConfigError("'gesture.min_confidence' must lie in [0,1]");
}

inline void read_model(const json& j, mmsnn::ModelConfig& m) {
  Reader r(j, "model");
  r.opt("physio_len", m.physio_len);
  if (r.has("conv_channels")) m.conv_channels = list<std::size_t>(r, "conv_channels");
  r.opt("lstm_layers", m.lstm_layers);
  r.opt("lstm_hidden", m.lstm_hidden);
  r.opt("d_img", m.d_img);
  r.opt("d_phys", m.d_phys);
  if (r.has("loss")) {
    Reader l(r.raw("loss"), "model.loss");
    l.opt("lambda_ver", m.loss.lambda_ver);
    l.opt("lambda_id", m.loss.lambda_id);
    l.opt("margin", m.loss.margin);
    l.finish();
  }
  r.finish();
}

inline void read_train(const json& j, mmsnn::Hyper& h) {
  Reader r(j, "train");
  r.opt("epochs", h.epochs);
  r.opt("lr", h.lr);
  r.opt("batch", h.batch);
  r.opt("momentum", h.momentum);
  r.opt("clip_norm", h.clip_norm);
  r.finish();
}

inline void read_experiment(const json& j, PipelineConfig& c) {
  Reader r(j, "experiment");
  auto& e = c.experiment;
  if (r.has("signal_kinds")) {
    e.signal_kinds.clear();
    for (const auto& s : list<std::string>(r, "signal_kinds")) e.signal_kinds.push_back(signal_kind(s, r.where("signal_kinds")));
  }
  r.opt("n_train_episodes", e.n_train_episodes);
  r.opt("n_repetitions", e.n_repetitions);
  r.opt("train_fraction", e.train_fraction);
  r.opt("max_similar_pairs", e.max_similar_pairs);
  r.opt("max_dissimilar_pairs", e.max_dissimilar_pairs);
  r.opt("max_verification_pairs", e.max_verification_pairs);
  r.opt("self_pairs", e.self_pairs);
  if (r.has("windows")) {
    const auto w = r.get<std::string>("windows");
    if (w == "truth") c.windows = WindowSource::Truth;
    else if (w == "detected") c.windows = WindowSource::Detected;
    else throw ConfigError("'experiment.windows' must be \"truth\" or \"detected\"");
  }
  if (r.has("curve_grid")) c.curve_grid = list<std::size_t>(r, "curve_grid");
  for (auto n : c.curve_grid) {
    if (n == 0) throw ConfigError("'experiment.curve_grid' values must be positive");
  }
  if (r.has("curve_signal")) c.curve_signal = signal_kind(r.get<std::string>("curve_signal"), r.where("curve_signal"));
  r.finish();
}

}  // namespace detail

inline PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  detail::Reader r(j, "");
  c.seed = r.get<std::uint64_t>("seed");
  if (r.has("output_dir")) c.output_dir = r.get<std::string>("output_dir");
  if (!r.has("datasets")) throw ConfigError("missing required key 'datasets'");
  const json& ds = r.raw("datasets");
  if (!ds.is_array() || ds.empty()) throw ConfigError("'datasets' must be a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string path = "datasets[" + std::to_string(i) + "]";
    detail::Reader d(ds[i], path);
    DatasetSpec spec;
    spec.name = d.get<std::string>("name");
    if (spec.name.empty() || spec.name.find_first_of("/\\") != std::string::npos) {
      throw ConfigError("'" + path + ".name' must be a plain non-empty name");
    }
    if (!names.insert(spec.name).second) throw ConfigError("duplicate dataset name '" + spec.name + "'");
    if (d.has("synth") == d.has("path")) throw ConfigError("'" + path + "' needs exactly one of 'synth' or 'path'");
    if (d.has("synth")) {
      spec.synth = detail::read_synth(d.raw("synth"), path + ".synth", derive_seed(c.seed, 100 + i));
    } else {
      spec.path = d.get<std::string>("path");
      if (d.has("format")) {
        const auto f = d.get<std::string>("format");
        if (f == "e4") spec.format = ingest::DatasetFormat::E4;
        else if (f == "generic") spec.format = ingest::DatasetFormat::Generic;
        else throw ConfigError("'" + path + ".format' must be \"e4\" or \"generic\"");
      }
    }
    d.finish();
    c.datasets.push_back(std::move(spec));
  }
  if (r.has("gesture")) detail::read_gesture(r.raw("gesture"), c.gesture);
  if (r.has("encoding")) {
    detail::Reader e(r.raw("encoding"), "encoding");
    e.opt("image_side", c.experiment.model.image_side);
    e.finish();
  }
  if (r.has("model")) detail::read_model(r.raw("model"), c.experiment.model);
  if (r.has("train")) detail::read_train(r.raw("train"), c.experiment.hyper);
  if (r.has("experiment")) detail::read_experiment(r.raw("experiment"), c);
  r.finish();

  c.experiment.seed = derive_seed(c.seed, 1);
  c.gesture.train.svm.seed = derive_seed(c.seed, 2);
  c.experiment.validate();
  c.source = j;
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = ingest::detail::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_config(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace pri::config
