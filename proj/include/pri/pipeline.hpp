#pragma once

// Stages behind the command-line tool. Each reads the validated config, consumes the
// previous stage's files and writes its artifacts plus a manifest.json.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pri/config.hpp"
#include "pri/experiment.hpp"
#include "pri/gesture.hpp"
#include "pri/ingest.hpp"
#include "pri/report.hpp"
#include "pri/rpencode.hpp"
#include "pri/synth.hpp"

namespace pri::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using config::PipelineConfig;

inline void write_json(const fs::path& path, const json& j) { ingest::detail::write_file(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  try {
    return json::parse(ingest::detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_manifest(const fs::path& dir, const std::string& command, const PipelineConfig& cfg,
                           std::vector<std::string> artifacts) {
  std::sort(artifacts.begin(), artifacts.end());
  write_json(dir / "manifest.json", report::manifest(command, cfg.source, cfg.seed, artifacts));
}

// ---------------------------------------------------------------------------
// synth

/// Generates every synthetic dataset into <output_dir>/data/<name>/ with truth.json.
inline std::vector<fs::path> run_synth(const PipelineConfig& cfg) {
  std::vector<fs::path> written;
  for (const auto& d : cfg.datasets) {
    if (!d.synth) continue;
    const auto dir = cfg.data_dir(d);
    std::error_code ec;
    fs::remove_all(dir, ec);
    report::ensure_dir(dir);
    const auto data = synth::synth_generate(*d.synth);
    std::vector<std::string> artifacts{"truth.json"};
    for (const auto& rec : data.recordings) {
      ingest::write_generic_recording(rec, dir / rec.subject_id / rec.session_id);
      artifacts.push_back(rec.subject_id + "/" + rec.session_id);
    }
    write_json(dir / "truth.json", ingest::truth_to_json(data.truth));
    write_manifest(dir, "synth", cfg, artifacts);
    written.push_back(dir);
  }
  if (written.empty()) throw ConfigError("no synthetic datasets in config");
  return written;
}

// ---------------------------------------------------------------------------
// Loading

struct LoadedDataset {
  std::string name;
  std::vector<ingest::SensorRecording> recordings;
  std::optional<std::vector<ingest::RecordingTruth>> truth;  // aligned with recordings
};

inline std::string recording_key(const std::string& subject, const std::string& session) { return subject + "/" + session; }

/// Windows per recording from a truth-style JSON array, aligned with `recordings`.
inline std::vector<ingest::RecordingTruth> align_windows(const std::vector<ingest::SensorRecording>& recordings,
                                                         const std::vector<ingest::RecordingTruth>& entries,
                                                         const std::string& source) {
  std::map<std::string, const ingest::RecordingTruth*> by_key;
  for (const auto& t : entries) by_key[recording_key(t.subject_id, t.session_id)] = &t;
  std::vector<ingest::RecordingTruth> out;
  for (const auto& rec : recordings) {
    auto it = by_key.find(recording_key(rec.subject_id, rec.session_id));
    if (it == by_key.end()) {
      throw FormatError(source + " has no entry for recording " + recording_key(rec.subject_id, rec.session_id));
    }
    out.push_back(*it->second);
  }
  return out;
}

inline LoadedDataset load(const PipelineConfig& cfg, const config::DatasetSpec& d) {
  const auto dir = cfg.data_dir(d);
  if (!fs::is_directory(dir)) throw IoError("dataset directory " + dir.string() + " does not exist");
  LoadedDataset out{d.name, ingest::load_dataset(dir, d.synth ? ingest::DatasetFormat::Generic : d.format), {}};
  if (out.recordings.empty()) throw InsufficientDataError("no recordings under " + dir.string());
  if (fs::exists(dir / "truth.json")) {
    out.truth = align_windows(out.recordings, ingest::truth_from_json(read_json(dir / "truth.json")),
                              (dir / "truth.json").string());
  }
  return out;
}

// ---------------------------------------------------------------------------
// gestures

struct DetectionScore {
  std::size_t truth = 0, detected = 0, matched = 0, label_correct = 0;
  double total_abs_error = 0.0;

  double recall() const { return truth ? static_cast<double>(matched) / static_cast<double>(truth) : 0.0; }
  double precision() const { return detected ? static_cast<double>(matched) / static_cast<double>(detected) : 0.0; }
  double label_accuracy() const { return matched ? static_cast<double>(label_correct) / static_cast<double>(matched) : 0.0; }
  double mean_abs_error() const { return matched ? total_abs_error / static_cast<double>(matched) : 0.0; }

  void add(const DetectionScore& o) {
    truth += o.truth;
    detected += o.detected;
    matched += o.matched;
    label_correct += o.label_correct;
    total_abs_error += o.total_abs_error;
  }
};

/// Greedy one-to-one matching in onset order: a detection hits the nearest unmatched truth
/// onset within `tolerance` samples.
inline DetectionScore match_detections(const std::vector<GestureWindow>& truth,
                                       const std::vector<GestureWindow>& detected, std::size_t tolerance) {
  DetectionScore s;
  s.truth = truth.size();
  s.detected = detected.size();
  std::vector<bool> used(truth.size(), false);
  for (const auto& d : detected) {
    std::size_t best = truth.size();
    std::size_t best_err = tolerance + 1;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (used[i]) continue;
      const std::size_t err = d.start > truth[i].start ? d.start - truth[i].start : truth[i].start - d.start;
      if (err < best_err) {
        best_err = err;
        best = i;
      }
    }
    if (best == truth.size()) continue;
    used[best] = true;
    ++s.matched;
    s.total_abs_error += static_cast<double>(best_err);
    if (truth[best].label == d.label) ++s.label_correct;
  }
  return s;
}

inline json score_json(const DetectionScore& s) {
  return {{"truth", s.truth},
          {"detected", s.detected},
          {"matched", s.matched},
          {"recall", s.recall()},
          {"precision", s.precision()},
          {"label_accuracy", s.label_accuracy()},
          {"mean_abs_onset_error", s.mean_abs_error()}};
}

inline gesture::GestureModel train_on(const LoadedDataset& ds, const std::vector<std::size_t>& which,
                                      const config::GestureSection& g) {
  std::vector<gesture::LabeledWindow> windows;
  for (std::size_t r : which) {
    auto lw = gesture::labeled_windows(gesture::acc_view(ds.recordings[r]), (*ds.truth)[r].windows, g.train);
    windows.insert(windows.end(), std::make_move_iterator(lw.begin()), std::make_move_iterator(lw.end()));
  }
  return gesture::train_gesture_svm(std::move(windows), g.train);
}

/// Detects and classifies gestures in every dataset. With ground truth, the classifier for
/// a recording is trained on the other half of the recordings (split by index parity), so
/// windows.json and the scores are out of sample; model.json is trained on everything.
inline void run_gestures(const PipelineConfig& cfg, bool dump_images) {
  for (const auto& d : cfg.datasets) {
    const auto ds = load(cfg, d);
    const auto out_dir = cfg.output_dir / "gestures" / d.name;
    std::error_code ec;
    fs::remove_all(out_dir, ec);
    report::ensure_dir(out_dir);
    std::vector<std::string> artifacts{"windows.json"};
    const auto& g = cfg.gesture;

    std::vector<gesture::GestureModel> fold_models;
    gesture::GestureModel full;
    if (ds.truth) {
      std::vector<std::size_t> all, even, odd;
      for (std::size_t r = 0; r < ds.recordings.size(); ++r) {
        all.push_back(r);
        (r % 2 ? odd : even).push_back(r);
      }
      full = train_on(ds, all, g);
      if (!odd.empty()) {
        fold_models.push_back(train_on(ds, odd, g));   // classifies even recordings
        fold_models.push_back(train_on(ds, even, g));  // classifies odd recordings
      }
      gesture::save_model(full, out_dir / "model.json");
      artifacts.push_back("model.json");
    } else if (!g.model_path.empty()) {
      full = gesture::load_model(g.model_path);
    } else {
      throw InsufficientDataError("dataset " + d.name + " has no truth.json and no gesture.model_path is configured");
    }

    json windows = json::array();
    DetectionScore onset_total, final_total;
    json per_recording = json::array();
    for (std::size_t r = 0; r < ds.recordings.size(); ++r) {
      const auto& rec = ds.recordings[r];
      const auto acc = gesture::acc_view(rec);
      const auto& model = fold_models.empty() ? full : fold_models[r % 2];
      const auto found = gesture::localize_gestures(acc, model, g.rqa, g.min_confidence);
      windows.push_back({{"subject_id", rec.subject_id},
                         {"session_id", rec.session_id},
                         {"windows", ingest::windows_to_json(found, true)}});
      if (ds.truth) {
        std::vector<GestureWindow> onsets;
        for (auto s : gesture::detect_gesture_onsets(acc, g.rqa)) onsets.push_back({s, s + 1, GestureClass::Up, 1.0});
        const auto& truth = (*ds.truth)[r].windows;
        const auto so = match_detections(truth, onsets, g.match_tolerance);
        const auto sf = match_detections(truth, found, g.match_tolerance);
        onset_total.add(so);
        final_total.add(sf);
        per_recording.push_back({{"subject_id", rec.subject_id}, {"session_id", rec.session_id},
                                 {"onsets", score_json(so)}, {"localized", score_json(sf)}});
      }
      if (dump_images) {
        const auto img_dir = out_dir / "images" / rec.subject_id / rec.session_id;
        report::ensure_dir(img_dir);
        for (const auto& w : found) {
          const std::size_t n = w.end - w.start;
          const auto img = rpencode::encode_acc_image(acc.x.subspan(w.start, n), acc.y.subspan(w.start, n),
                                                      acc.z.subspan(w.start, n), cfg.experiment.model.image_side);
          const std::string name = std::to_string(w.start) + "_" + std::string(to_string(w.label)) + ".png";
          rpencode::write_png(img, img_dir / name);
          artifacts.push_back("images/" + rec.subject_id + "/" + rec.session_id + "/" + name);
        }
      }
    }
    write_json(out_dir / "windows.json", windows);
    if (ds.truth) {
      write_json(out_dir / "detection_report.json",
                 {{"dataset", d.name},
                  {"match_tolerance", g.match_tolerance},
                  {"classifier", fold_models.empty() ? "in-sample" : "two-fold by recording"},
                  {"onsets", score_json(onset_total)},
                  {"localized", score_json(final_total)},
                  {"recordings", per_recording}});
      artifacts.push_back("detection_report.json");
    }
    write_manifest(out_dir, "gestures", cfg, artifacts);
  }
}

// ---------------------------------------------------------------------------
// attack

inline attack::Dataset attack_dataset(const PipelineConfig& cfg, const config::DatasetSpec& d,
                                      config::WindowSource source) {
  auto ds = load(cfg, d);
  std::vector<ingest::RecordingTruth> windows;
  if (source == config::WindowSource::Truth) {
    if (!ds.truth) throw InsufficientDataError("dataset " + d.name + " has no truth.json; use detected windows");
    windows = *ds.truth;
  } else {
    const auto path = cfg.output_dir / "gestures" / d.name / "windows.json";
    if (!fs::exists(path)) throw IoError(path.string() + " not found; run the gestures stage first");
    windows = align_windows(ds.recordings, ingest::truth_from_json(read_json(path)), path.string());
  }
  attack::Dataset out{d.name, {}};
  for (std::size_t r = 0; r < ds.recordings.size(); ++r) {
    out.recordings.push_back({std::move(ds.recordings[r]), std::move(windows[r].windows)});
  }
  return out;
}

/// Artifacts go to <output_dir>/attack/<truth|detected>/.
inline attack::ExperimentReport run_attack(const PipelineConfig& cfg, bool curve, config::WindowSource source) {
  std::vector<attack::Dataset> datasets;
  for (const auto& d : cfg.datasets) datasets.push_back(attack_dataset(cfg, d, source));
  auto rep = attack::run_experiment(datasets, cfg.experiment);
  if (curve) {
    for (const auto& ds : datasets) {
      auto pts = attack::learning_curve(ds, cfg.curve_signal, cfg.experiment, cfg.curve_grid);
      rep.curve.insert(rep.curve.end(), pts.begin(), pts.end());
    }
  }
  rep.metadata["config_hash"] = report::config_hash(cfg.source);
  rep.metadata["seed"] = std::to_string(cfg.seed);
  rep.metadata["windows"] = source == config::WindowSource::Truth ? "truth" : "detected";
  rep.metadata["version"] = PRI_VERSION;
  const auto out_dir = cfg.output_dir / "attack" / rep.metadata["windows"];
  const auto files = report::render_report(rep, out_dir);
  write_manifest(out_dir, "attack", cfg, files);
  return rep;
}

/// Re-renders CSV/SVG from a report JSON into out_dir.
inline std::vector<std::string> run_report(const fs::path& report_json, const fs::path& out_dir) {
  return report::render_report(report::load_report(report_json), out_dir);
}

}  // namespace pri::pipeline
