#pragma once

// Re-identification experiments: per (dataset, signal kind), repeated stratified
// splits, sampled training episodes, pair construction, mmSNN training and
// identification accuracy on held-out gesture windows.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pri/error.hpp"
#include "pri/gesture_types.hpp"
#include "pri/ingest.hpp"
#include "pri/mmsnn.hpp"
#include "pri/numeric.hpp"
#include "pri/pairs.hpp"
#include "pri/physio.hpp"
#include "pri/rng.hpp"
#include "pri/rpencode.hpp"

namespace pri::attack {

using physio::SignalKind;

struct LabeledRecording {
  ingest::SensorRecording recording;
  std::vector<GestureWindow> windows;
};

struct Dataset {
  std::string name;
  std::vector<LabeledRecording> recordings;
};

struct ExperimentConfig {
  std::vector<SignalKind> signal_kinds{physio::kAllSignalKinds.begin(), physio::kAllSignalKinds.end()};
  std::size_t n_train_episodes = 100;
  std::size_t n_repetitions = 5;
  double train_fraction = 0.7;
  std::uint64_t seed = 1;
  /// Caps on sampled distinct-window pairs per repetition (fewer are used when fewer exist).
  std::size_t max_similar_pairs = 200;
  std::size_t max_dissimilar_pairs = 200;
  /// Add an (episode, episode) similar pair per training episode so every episode feeds
  /// the identification loss.
  bool self_pairs = true;
  std::size_t max_verification_pairs = 200;
  mmsnn::ModelConfig model;  // num_identities is set per dataset
  mmsnn::Hyper hyper;

  void validate() const {
    if (signal_kinds.empty()) throw ConfigError("experiment: signal_kinds must not be empty");
    if (n_train_episodes == 0) throw ConfigError("experiment: n_train_episodes must be positive");
    if (n_repetitions == 0) throw ConfigError("experiment: n_repetitions must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("experiment: train_fraction must lie in (0,1)");
    auto m = model;
    m.num_identities = std::max<std::size_t>(2, m.num_identities);
    m.validate();
    hyper.validate();
  }
};

// ---------------------------------------------------------------------------
// Prepared windows

struct WindowInfo {
  std::size_t id = 0;
  std::string key;  // subject/session/start
  std::size_t identity = 0;
  GestureClass gesture = GestureClass::Up;
  std::size_t recording = 0;
};

struct PreparedDataset {
  std::string name;
  std::vector<std::string> subjects;  // identity index -> subject id
  std::vector<WindowInfo> windows;
  std::vector<rpencode::AccImage> images;
  /// Raw (unnormalized, possibly NaN) physio segments per kind; absent kinds carry a reason.
  std::map<SignalKind, std::vector<std::vector<double>>> physio;
  std::map<SignalKind, std::string> absent;
};

/// L samples of a uniform series by linear interpolation at evenly spaced times in [t0, t1].
/// NaN where the series does not cover the time or a neighbour is missing.
inline std::vector<double> segment_at(const physio::DerivedSeries& s, double t0, double t1, std::size_t len) {
  std::vector<double> out(len, kMissing);
  if (s.values.empty() || !(s.rate > 0.0)) return out;
  for (std::size_t k = 0; k < len; ++k) {
    const double t = len > 1 ? t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(len - 1) : 0.5 * (t0 + t1);
    const double u = (t - s.start_time) * s.rate;
    if (u < 0.0 || u > static_cast<double>(s.values.size() - 1)) continue;
    const auto i = std::min(static_cast<std::size_t>(u), s.values.size() - 1);
    const std::size_t j = std::min(i + 1, s.values.size() - 1);
    const double f = u - static_cast<double>(i);
    out[k] = (1.0 - f) * s.values[i] + f * s.values[j];
  }
  return out;
}

inline PreparedDataset prepare_dataset(const Dataset& ds, const std::vector<SignalKind>& kinds, std::size_t image_side,
                                       std::size_t physio_len) {
  PreparedDataset out;
  out.name = ds.name;
  std::set<std::string> subjects;
  for (const auto& lr : ds.recordings) subjects.insert(lr.recording.subject_id);
  out.subjects.assign(subjects.begin(), subjects.end());
  auto identity_of = [&](const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(out.subjects.begin(), out.subjects.end(), s) - out.subjects.begin());
  };

  for (std::size_t r = 0; r < ds.recordings.size(); ++r) {
    const auto& lr = ds.recordings[r];
    const auto& rec = lr.recording;
    const auto& ax = rec.acc_x().values;
    const auto& ay = rec.acc_y().values;
    const auto& az = rec.acc_z().values;
    for (const auto& w : lr.windows) {
      if (!(w.end > w.start) || w.end > ax.size()) {
        throw ArgumentError("window [" + std::to_string(w.start) + "," + std::to_string(w.end) + ") outside " +
                            rec.subject_id + "/" + rec.session_id);
      }
      WindowInfo info;
      info.id = out.windows.size();
      info.key = rec.subject_id + "/" + rec.session_id + "/" + std::to_string(w.start);
      info.identity = identity_of(rec.subject_id);
      info.gesture = w.label;
      info.recording = r;
      out.windows.push_back(info);
      const std::size_t n = w.end - w.start;
      auto img = rpencode::encode_acc_image(std::span<const double>(ax).subspan(w.start, n),
                                            std::span<const double>(ay).subspan(w.start, n),
                                            std::span<const double>(az).subspan(w.start, n), image_side);
      img.source_window = w;
      out.images.push_back(std::move(img));
    }
  }

  for (SignalKind kind : kinds) {
    std::vector<std::vector<double>> segs;
    try {
      for (const auto& lr : ds.recordings) {
        const auto& rec = lr.recording;
        const auto series = physio::select_signal(rec, kind);
        const auto& acc = rec.acc_x();
        for (const auto& w : lr.windows) segs.push_back(segment_at(series, acc.time_of(w.start), acc.time_of(w.end), physio_len));
      }
      out.physio.emplace(kind, std::move(segs));
    } catch (const MissingChannelError& e) {
      out.absent.emplace(kind, e.what());
    } catch (const InsufficientDataError& e) {
      out.absent.emplace(kind, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

struct ZScore {
  double mean = 0.0, sd = 1.0;
};

/// Statistics over the finite samples of the given segments.
inline ZScore fit_zscore(const std::vector<std::vector<double>>& segments, const std::vector<std::size_t>& which) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t w : which) {
    for (double v : segments[w]) {
      if (!std::isfinite(v)) continue;
      sum += v;
      ++n;
    }
  }
  ZScore z;
  if (n == 0) return z;
  z.mean = sum / static_cast<double>(n);
  for (std::size_t w : which) {
    for (double v : segments[w]) {
      if (std::isfinite(v)) sq += (v - z.mean) * (v - z.mean);
    }
  }
  const double var = sq / static_cast<double>(n);
  z.sd = var > 1e-24 ? std::sqrt(var) : 1.0;
  return z;
}

/// z-scored copy; interior gaps are linearly interpolated, edge gaps take the nearest
/// finite value, and an all-missing segment becomes the training mean (0).
inline std::vector<double> normalize_segment(const std::vector<double>& raw, const ZScore& z) {
  std::vector<double> out(raw.size(), 0.0);
  std::vector<std::size_t> finite;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (std::isfinite(raw[i])) finite.push_back(i);
  }
  if (finite.empty()) return out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    while (k + 1 < finite.size() && finite[k + 1] <= i) ++k;
    double v;
    if (i <= finite.front()) {
      v = raw[finite.front()];
    } else if (i >= finite.back()) {
      v = raw[finite.back()];
    } else {
      const std::size_t a = finite[k], b = finite[k + 1];
      const double f = static_cast<double>(i - a) / static_cast<double>(b - a);
      v = (1.0 - f) * raw[a] + f * raw[b];
    }
    out[i] = (v - z.mean) / z.sd;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;  // window ids, shuffled order (episodes are a prefix)
  std::vector<std::size_t> test;   // window ids, ascending
};

/// Stratified by identity; each identity keeps >= 1 test window when it has >= 2 windows.
inline Split stratified_split(const PreparedDataset& ds, double train_fraction, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5b1));
  std::map<std::size_t, std::vector<std::size_t>> by_id;
  for (const auto& w : ds.windows) by_id[w.identity].push_back(w.id);
  Split s;
  for (auto& [id, members] : by_id) {
    shuffle(members, rng);
    auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  shuffle(s.train, rng);
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------
// One repetition

struct RepetitionRecord {
  std::size_t repetition = 0;
  std::size_t n_episodes = 0;
  double accuracy = 0.0;               // identification, fraction
  std::optional<double> verification_accuracy;  // fraction; empty without positive and negative test pairs
  std::size_t n_train_pairs = 0;
  std::size_t n_test_windows = 0;
  std::vector<std::size_t> train_pair_windows;  // window ids used in any training pair, ascending
  std::vector<std::size_t> test_windows;        // ascending
  std::vector<double> loss_history;

  bool operator==(const RepetitionRecord&) const = default;
};

inline std::vector<WindowRef> refs_of(const PreparedDataset& ds, const std::vector<std::size_t>& ids) {
  std::vector<WindowRef> refs;
  for (std::size_t id : ids) refs.push_back({id, ds.windows[id].identity, ds.windows[id].gesture});
  return refs;
}

inline std::vector<SamplePair> capped_pairs(const PreparedDataset& ds, const std::vector<std::size_t>& ids,
                                            std::size_t max_similar, std::size_t max_dissimilar, std::uint64_t seed) {
  const auto refs = refs_of(ds, ids);
  const auto cap = pair_capacity(refs);
  return build_pairs(refs, std::min(max_similar, cap.similar), std::min(max_dissimilar, cap.dissimilar), seed);
}

inline mmsnn::ModalInput modal_input(const PreparedDataset& ds, SignalKind kind, std::size_t id, const ZScore& z) {
  return {ds.images[id], normalize_segment(ds.physio.at(kind)[id], z)};
}

/// Trains on the first n_episodes of split.train and evaluates on split.test.
inline RepetitionRecord run_repetition(const PreparedDataset& ds, SignalKind kind, const ExperimentConfig& cfg,
                                       const Split& split, std::size_t n_episodes, std::size_t repetition,
                                       std::uint64_t rep_seed) {
  if (split.test.empty()) throw ExperimentError("no test windows in " + ds.name);
  if (n_episodes > split.train.size()) {
    throw ExperimentError("requested " + std::to_string(n_episodes) + " training episodes but only " +
                          std::to_string(split.train.size()) + " training windows exist in " + ds.name);
  }
  const auto& segments = ds.physio.at(kind);
  const ZScore z = fit_zscore(segments, split.train);
  std::vector<std::size_t> episodes(split.train.begin(), split.train.begin() + static_cast<std::ptrdiff_t>(n_episodes));
  std::sort(episodes.begin(), episodes.end());

  // Training set: pool = episodes, pairs reference pool slots.
  mmsnn::TrainingSet data;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t id : episodes) {
    slot[id] = data.inputs.size();
    data.inputs.push_back(modal_input(ds, kind, id, z));
    data.identities.push_back(ds.windows[id].identity);
  }
  const auto pairs = capped_pairs(ds, episodes, cfg.max_similar_pairs, cfg.max_dissimilar_pairs, derive_seed(rep_seed, 1));
  for (const auto& p : pairs) data.pairs.push_back({slot.at(p.a), slot.at(p.b), p.y});
  if (cfg.self_pairs) {
    for (std::size_t s = 0; s < data.inputs.size(); ++s) data.pairs.push_back({s, s, 1});
  }
  bool has_neg = false;
  for (const auto& p : data.pairs) has_neg = has_neg || p.y == 0;
  if (!has_neg) throw ExperimentError("training episodes of " + ds.name + " cover a single identity");

  RepetitionRecord rec;
  rec.repetition = repetition;
  rec.n_episodes = n_episodes;
  rec.n_train_pairs = data.pairs.size();
  std::set<std::size_t> used;
  for (const auto& p : data.pairs) {
    used.insert(episodes[p.a]);
    used.insert(episodes[p.b]);
  }
  rec.train_pair_windows.assign(used.begin(), used.end());
  rec.test_windows = split.test;
  for (std::size_t id : rec.test_windows) {
    if (used.count(id)) throw ExperimentError("split hygiene violated: test window " + ds.windows[id].key + " used in training");
  }

  auto model_cfg = cfg.model;
  model_cfg.num_identities = std::max<std::size_t>(2, ds.subjects.size());
  auto params = mmsnn::init_model(model_cfg, derive_seed(rep_seed, 2));
  params.physio_mean = z.mean;
  params.physio_sd = z.sd;
  params.identity_names = ds.subjects;
  auto hyper = cfg.hyper;
  hyper.seed = derive_seed(rep_seed, 3);
  auto trained = mmsnn::train(std::move(params), data, hyper);
  rec.loss_history = trained.history;

  // Identification on every test window.
  std::vector<std::size_t> pred, truth;
  std::map<std::size_t, std::vector<double>> test_eta;
  for (std::size_t id : split.test) {
    const auto input = modal_input(ds, kind, id, z);
    const auto eta = mmsnn::encode(trained.params, input);
    const auto prob = mmsnn::identification_prob(trained.params, eta);
    std::size_t best = 0;
    for (std::size_t k = 1; k < prob.size(); ++k) {
      if (prob[k] > prob[best]) best = k;
    }
    pred.push_back(best);
    truth.push_back(ds.windows[id].identity);
    test_eta.emplace(id, eta);
  }
  rec.n_test_windows = pred.size();
  rec.accuracy = accuracy(pred, truth);

  // Verification: equal-error threshold from training pairs, applied to test pairs.
  std::vector<double> train_d;
  std::vector<bool> train_s;
  std::map<std::size_t, std::vector<double>> train_eta;
  for (std::size_t s = 0; s < data.inputs.size(); ++s) train_eta.emplace(s, mmsnn::encode(trained.params, data.inputs[s]));
  for (const auto& p : pairs) {
    train_d.push_back(mmsnn::euclidean(train_eta[slot.at(p.a)], train_eta[slot.at(p.b)]));
    train_s.push_back(p.y == 1);
  }
  const auto test_pairs = capped_pairs(ds, split.test, cfg.max_verification_pairs, cfg.max_verification_pairs,
                                       derive_seed(rep_seed, 4));
  bool have_pos = false, have_neg = false;
  for (const auto& p : test_pairs) (p.y == 1 ? have_pos : have_neg) = true;
  if (!train_d.empty() && have_pos && have_neg) {
    const double threshold = equal_error_threshold(train_d, train_s);
    std::vector<bool> predicted, actual;
    for (const auto& p : test_pairs) {
      predicted.push_back(mmsnn::euclidean(test_eta[p.a], test_eta[p.b]) <= threshold);
      actual.push_back(p.y == 1);
    }
    rec.verification_accuracy = confusion(predicted, actual).accuracy();
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Aggregation and reports

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample SD (n - 1); 0 for a single value.
inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct CellResult {
  std::string dataset;
  SignalKind kind = SignalKind::Hr;
  bool absent = false;
  std::string absent_reason;
  std::size_t n_episodes = 0;
  std::vector<double> accuracies;  // percent, per repetition
  std::vector<RepetitionRecord> repetitions;

  double mean() const { return mean_of(accuracies); }
  double sd() const { return sd_of(accuracies); }
  bool operator==(const CellResult&) const = default;
};

struct CurvePoint {
  std::string dataset;
  SignalKind kind = SignalKind::Hr;
  std::size_t n_episodes = 0;
  std::vector<double> accuracies;  // percent, per repetition
  double mean() const { return mean_of(accuracies); }
  double sd() const { return sd_of(accuracies); }
  bool operator==(const CurvePoint&) const = default;
};

struct ExperimentReport {
  std::vector<std::string> datasets;
  std::vector<CellResult> cells;
  std::vector<CurvePoint> curve;
  std::map<std::string, std::string> metadata;

  bool operator==(const ExperimentReport&) const = default;
};

/// Accuracy (percent) per repetition for each episode count; all counts share each
/// repetition's split, and smaller training sets are prefixes of larger ones.
inline std::vector<std::vector<RepetitionRecord>> run_grid(const PreparedDataset& ds, SignalKind kind,
                                                           const ExperimentConfig& cfg,
                                                           const std::vector<std::size_t>& episode_grid) {
  std::vector<std::vector<RepetitionRecord>> out(episode_grid.size());
  for (std::size_t r = 0; r < cfg.n_repetitions; ++r) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
    const auto split = stratified_split(ds, cfg.train_fraction, rep_seed);
    for (std::size_t g = 0; g < episode_grid.size(); ++g) {
      out[g].push_back(run_repetition(ds, kind, cfg, split, episode_grid[g], r, rep_seed));
    }
  }
  return out;
}

inline CellResult run_cell(const PreparedDataset& ds, SignalKind kind, const ExperimentConfig& cfg) {
  CellResult cell;
  cell.dataset = ds.name;
  cell.kind = kind;
  cell.n_episodes = cfg.n_train_episodes;
  if (auto it = ds.absent.find(kind); it != ds.absent.end()) {
    cell.absent = true;
    cell.absent_reason = it->second;
    return cell;
  }
  auto grid = run_grid(ds, kind, cfg, {cfg.n_train_episodes});
  cell.repetitions = std::move(grid.front());
  for (const auto& r : cell.repetitions) cell.accuracies.push_back(100.0 * r.accuracy);
  return cell;
}

inline ExperimentReport run_experiment(const std::vector<Dataset>& datasets, const ExperimentConfig& cfg) {
  cfg.validate();
  if (datasets.empty()) throw ExperimentError("no datasets");
  ExperimentReport report;
  for (const auto& ds : datasets) {
    if (ds.recordings.empty()) throw ExperimentError("dataset " + ds.name + " has no recordings");
    report.datasets.push_back(ds.name);
    const auto prepared = prepare_dataset(ds, cfg.signal_kinds, cfg.model.image_side, cfg.model.physio_len);
    if (prepared.subjects.size() < 2) throw ExperimentError("dataset " + ds.name + " has fewer than two subjects");
    for (SignalKind kind : cfg.signal_kinds) report.cells.push_back(run_cell(prepared, kind, cfg));
  }
  return report;
}

inline std::vector<CurvePoint> learning_curve(const Dataset& dataset, SignalKind kind, const ExperimentConfig& cfg,
                                              const std::vector<std::size_t>& episode_grid) {
  cfg.validate();
  if (episode_grid.empty()) throw ConfigError("learning_curve: empty episode grid");
  const auto prepared = prepare_dataset(dataset, {kind}, cfg.model.image_side, cfg.model.physio_len);
  if (auto it = prepared.absent.find(kind); it != prepared.absent.end()) throw ExperimentError(it->second);
  const auto grid = run_grid(prepared, kind, cfg, episode_grid);
  std::vector<CurvePoint> curve;
  for (std::size_t g = 0; g < episode_grid.size(); ++g) {
    CurvePoint p{dataset.name, kind, episode_grid[g], {}};
    for (const auto& r : grid[g]) p.accuracies.push_back(100.0 * r.accuracy);
    curve.push_back(std::move(p));
  }
  return curve;
}

}  // namespace pri::attack
