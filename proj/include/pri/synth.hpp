#pragma once

// Labeled synthetic wearable sessions. Each subject gets its own physiological
// baselines plus gesture-locked responses whose spread is scaled by
// identity_separation, so that separation 0 is a no-signal control.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pri/error.hpp"
#include "pri/gesture_types.hpp"
#include "pri/ingest.hpp"
#include "pri/rng.hpp"

namespace pri::synth {

struct SynthConfig {
  std::size_t n_subjects = 5;
  std::size_t n_sessions = 2;
  std::size_t gestures_per_session = 24;
  std::vector<GestureClass> gesture_classes{kAllGestures.begin(), kAllGestures.end()};
  double identity_separation = 0.8;
  double noise_sd = 0.03;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_subjects < 2) throw ConfigError("n_subjects must be >= 2 (pairing needs two identities)");
    if (n_sessions < 1) throw ConfigError("n_sessions must be positive");
    if (gestures_per_session < 1) throw ConfigError("gestures_per_session must be positive");
    if (gesture_classes.empty()) throw ConfigError("gesture_classes must not be empty");
    if (!(identity_separation >= 0.0 && identity_separation <= 1.0)) {
      throw ConfigError("identity_separation must lie in [0,1]");
    }
    if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be nonnegative");
  }
};

// Fixed generator constants.
inline constexpr double kAccRate = 32.0;
inline constexpr double kPpgRate = 64.0;
inline constexpr double kEdaRate = 4.0;
inline constexpr double kTempRate = 4.0;
inline constexpr double kMotifAmplitude = 0.8;  // g
inline constexpr double kHrLow = 55.0, kHrHigh = 90.0, kHrOffsetMax = 8.0;
inline constexpr double kBrLow = 10.0, kBrHigh = 22.0, kBrOffsetMax = 3.0;
/// HR jitter SD in BPM per unit of noise_sd.
inline constexpr double kHrNoisePerUnit = 20.0;
/// BR jitter SD in breaths/min per unit of noise_sd.
inline constexpr double kBrNoisePerUnit = 5.0;

inline double hr_noise_sd(const SynthConfig& c) { return c.noise_sd * kHrNoisePerUnit; }

struct SubjectProfile {
  double hr_base = 0.0;
  double br_base = 0.0;
  double eda_tonic = 0.0;
  double temp_base = 0.0;
  std::array<double, kNumGestureClasses> hr_offset{};
  std::array<double, kNumGestureClasses> br_offset{};
  std::array<double, kNumGestureClasses> scr_amplitude{};

  double gesture_locked_hr(GestureClass g) const { return hr_base + hr_offset[index_of(g)]; }
};

/// Unit-amplitude acceleration motif for gesture `g` at normalized time u in [0,1].
inline std::array<double, 3> motif(GestureClass g, double u) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double s1 = std::sin(two_pi * u);
  const double s2 = std::sin(2.0 * two_pi * u);
  const double c1 = 0.5 * (1.0 - std::cos(two_pi * u));
  switch (g) {
    case GestureClass::Up: return {0.0, 0.0, s1};
    case GestureClass::Down: return {0.0, 0.0, -s1};
    case GestureClass::Left: return {-s1, 0.0, 0.0};
    case GestureClass::Right: return {s1, 0.0, 0.0};
    case GestureClass::CW: return {s1, 0.0, -c1};
    case GestureClass::CCW: return {-s1, 0.0, -c1};
    case GestureClass::Z: return {s2, 0.0, -c1};
    case GestureClass::AZ: return {s2, 0.0, c1};
    case GestureClass::S: return {s2, c1, 0.0};
    case GestureClass::AS: return {-s2, c1, 0.0};
    case GestureClass::Push: return {0.0, s1, 0.0};
    case GestureClass::Pull: return {0.0, -s1, 0.0};
  }
  return {0.0, 0.0, 0.0};
}

namespace detail {

/// One draw per stratum of [lo, hi), strata assigned to subjects in random order.
inline std::vector<double> stratified(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order, rng);
  std::vector<double> out(n);
  const double width = (hi - lo) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + width * (static_cast<double>(order[i]) + uniform(rng, 0.0, 1.0));
  }
  return out;
}

inline double min_gap(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
  return gap;
}

/// Smooth gesture-locked response: 1 s rise, plateau while the gesture lasts,
/// exponential decay with a 4 s time constant afterwards.
inline double response_kernel(double t, double duration) {
  if (t < 0.0) return 0.0;
  if (t < duration) {
    const double r = std::min(1.0, t / 1.0);
    return r * r * (3.0 - 2.0 * r);
  }
  return std::exp(-(t - duration) / 4.0);
}

/// Skin conductance response shape: 1 s rise, 3 s decay.
inline double scr_kernel(double t) {
  if (t < 0.0) return 0.0;
  if (t < 1.0) return t;
  return std::exp(-(t - 1.0) / 3.0);
}

}  // namespace detail

/// Per-subject physiological parameters. At separation 1, gesture-locked HR means
/// of different subjects are at least 3 x the HR jitter SD apart whenever a
/// rejection search of 500 draws per gesture can achieve that; otherwise the
/// best draw found is kept.
inline std::vector<SubjectProfile> make_subject_profiles(const SynthConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, 0));
  const std::size_t n = config.n_subjects;
  const double sep = config.identity_separation;
  const double hr_center = 0.5 * (kHrLow + kHrHigh);
  const double br_center = 0.5 * (kBrLow + kBrHigh);

  const auto hr_raw = detail::stratified(rng, n, kHrLow, kHrHigh);
  const auto br_raw = detail::stratified(rng, n, kBrLow, kBrHigh);
  std::vector<SubjectProfile> profiles(n);
  for (std::size_t s = 0; s < n; ++s) {
    profiles[s].hr_base = hr_center + sep * (hr_raw[s] - hr_center);
    profiles[s].br_base = br_center + sep * (br_raw[s] - br_center);
    profiles[s].eda_tonic = 5.0 + sep * uniform(rng, -2.0, 2.0);
    profiles[s].temp_base = 33.0 + sep * uniform(rng, -0.3, 0.3);
  }
  const double required_gap = 3.0 * hr_noise_sd(config);
  for (std::size_t g = 0; g < kNumGestureClasses; ++g) {
    std::vector<double> best_offsets;
    double best_gap = -1.0;
    for (int attempt = 0; attempt < 500; ++attempt) {
      std::vector<double> offsets(n), means(n);
      for (std::size_t s = 0; s < n; ++s) {
        offsets[s] = uniform(rng, -kHrOffsetMax, kHrOffsetMax);
        means[s] = hr_raw[s] + offsets[s];
      }
      const double gap = detail::min_gap(means);
      if (gap > best_gap) {
        best_gap = gap;
        best_offsets = offsets;
      }
      if (gap >= required_gap) break;
    }
    for (std::size_t s = 0; s < n; ++s) {
      profiles[s].hr_offset[g] = sep * best_offsets[s];
      profiles[s].br_offset[g] = sep * uniform(rng, -kBrOffsetMax, kBrOffsetMax);
      profiles[s].scr_amplitude[g] = 0.4 + sep * uniform(rng, -0.3, 0.3);
    }
  }
  return profiles;
}

struct SynthDataset {
  std::vector<ingest::SensorRecording> recordings;
  std::vector<ingest::RecordingTruth> truth;
};

inline std::string subject_name(std::size_t s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02zu", s + 1);
  return buf;
}

namespace detail {

struct Placed {
  GestureClass label;
  std::size_t start;     // ACC sample index
  std::size_t duration;  // ACC samples
  double amplitude;
};

/// Ornstein-Uhlenbeck noise with stationary SD `sd` and time constant `tau` seconds.
inline std::vector<double> ou_noise(Rng& rng, std::size_t n, double rate, double sd, double tau) {
  std::vector<double> out(n, 0.0);
  if (sd == 0.0) return out;
  const double a = std::exp(-1.0 / (rate * tau));
  const double innov = sd * std::sqrt(1.0 - a * a);
  double v = gaussian(rng, sd);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = v;
    v = a * v + gaussian(rng, innov);
  }
  return out;
}

inline ingest::SensorRecording make_session(const SynthConfig& config, const SubjectProfile& profile,
                                            std::size_t subject, std::size_t session,
                                            ingest::RecordingTruth& truth) {
  using ingest::Channel;
  using ingest::ChannelKind;
  Rng rng(derive_seed(config.seed, 1 + subject * 1009 + session));

  // Gesture schedule.
  std::vector<GestureClass> order;
  while (order.size() < config.gestures_per_session) {
    std::vector<GestureClass> round = config.gesture_classes;
    shuffle(round, rng);
    for (auto g : round) {
      if (order.size() < config.gestures_per_session) order.push_back(g);
    }
  }
  std::vector<Placed> placed;
  double t = 6.0;
  for (auto g : order) {
    const auto duration = static_cast<std::size_t>(56 + uniform_index(rng, 17));
    const auto start = static_cast<std::size_t>(std::lround(t * kAccRate));
    placed.push_back({g, start, duration, uniform(rng, 0.85, 1.15)});
    t = static_cast<double>(start + duration) / kAccRate + uniform(rng, 5.0, 8.0);
  }
  const double total_s = t + 1.0;
  const auto n_acc = static_cast<std::size_t>(std::ceil(total_s * kAccRate));

  ingest::SensorRecording rec;
  rec.subject_id = subject_name(subject);
  char sess[16];
  std::snprintf(sess, sizeof sess, "sess%zu", session + 1);
  rec.session_id = sess;
  rec.provenance = ingest::Provenance::Synthetic;
  const double start_time = 1600000000.0 + 86400.0 * static_cast<double>(subject) +
                            3600.0 * static_cast<double>(session);

  // ACC: tilted gravity + motifs + white noise.
  std::array<double, 3> gravity{uniform(rng, -0.15, 0.15), uniform(rng, -0.15, 0.15), 1.0};
  const double gnorm = std::sqrt(gravity[0] * gravity[0] + gravity[1] * gravity[1] + 1.0);
  for (double& v : gravity) v /= gnorm;
  std::array<std::vector<double>, 3> acc;
  for (int a = 0; a < 3; ++a) acc[a].assign(n_acc, gravity[a]);
  for (const auto& p : placed) {
    for (std::size_t i = 0; i < p.duration && p.start + i < n_acc; ++i) {
      const auto m = motif(p.label, static_cast<double>(i) / static_cast<double>(p.duration));
      for (int a = 0; a < 3; ++a) acc[a][p.start + i] += kMotifAmplitude * p.amplitude * m[a];
    }
    truth.windows.push_back({p.start, p.start + p.duration, p.label, 1.0});
  }
  for (int a = 0; a < 3; ++a) {
    for (double& v : acc[a]) v += gaussian(rng, config.noise_sd);
  }
  const ChannelKind axes[3] = {ChannelKind::AccX, ChannelKind::AccY, ChannelKind::AccZ};
  for (int a = 0; a < 3; ++a) {
    rec.channels.emplace(axes[a], Channel{axes[a], kAccRate, start_time, std::move(acc[a])});
  }

  auto gesture_drive = [&](double time_s, auto&& amplitude_of) {
    double v = 0.0;
    for (const auto& p : placed) {
      const double onset = static_cast<double>(p.start) / kAccRate;
      const double dur = static_cast<double>(p.duration) / kAccRate;
      if (time_s < onset || time_s > onset + dur + 30.0) continue;
      v += amplitude_of(p.label) * response_kernel(time_s - onset, dur);
    }
    return v;
  };

  // PPG: pulse train at the instantaneous HR, amplitude- and baseline-modulated
  // by respiration at the instantaneous BR.
  const auto n_ppg = static_cast<std::size_t>(std::ceil(total_s * kPpgRate));
  const auto hr_jitter = ou_noise(rng, n_ppg, kPpgRate, hr_noise_sd(config), 3.0);
  const auto br_jitter = ou_noise(rng, n_ppg, kPpgRate, config.noise_sd * kBrNoisePerUnit, 5.0);
  std::vector<double> ppg(n_ppg);
  double cardiac_phase = uniform(rng, 0.0, 1.0);
  double resp_phase = uniform(rng, 0.0, 1.0);
  for (std::size_t i = 0; i < n_ppg; ++i) {
    const double ts = static_cast<double>(i) / kPpgRate;
    const double hr = profile.hr_base + hr_jitter[i] +
                      gesture_drive(ts, [&](GestureClass g) { return profile.hr_offset[index_of(g)]; });
    const double br = profile.br_base + br_jitter[i] +
                      gesture_drive(ts, [&](GestureClass g) { return profile.br_offset[index_of(g)]; });
    const double f = cardiac_phase - std::floor(cardiac_phase);
    const double pulse = std::exp(-0.5 * std::pow((f - 0.3) / 0.08, 2.0));
    const double resp = std::sin(2.0 * std::numbers::pi * resp_phase);
    ppg[i] = 50.0 * ((1.0 + 0.25 * resp) * pulse + 0.08 * resp) + gaussian(rng, 25.0 * config.noise_sd);
    cardiac_phase += std::clamp(hr, 30.0, 200.0) / 60.0 / kPpgRate;
    resp_phase += std::clamp(br, 4.0, 40.0) / 60.0 / kPpgRate;
  }
  rec.channels.emplace(ChannelKind::Ppg, Channel{ChannelKind::Ppg, kPpgRate, start_time, std::move(ppg)});

  // EDA: tonic level with session offset and drift, plus gesture-locked SCRs.
  const auto n_eda = static_cast<std::size_t>(std::ceil(total_s * kEdaRate));
  const double eda_session = uniform(rng, -1.5, 1.5);
  const double eda_drift = uniform(rng, -0.01, 0.01);
  std::vector<double> eda(n_eda);
  for (std::size_t i = 0; i < n_eda; ++i) {
    const double ts = static_cast<double>(i) / kEdaRate;
    double v = profile.eda_tonic + eda_session + eda_drift * ts;
    for (const auto& p : placed) {
      const double onset = static_cast<double>(p.start) / kAccRate + 1.0;
      v += profile.scr_amplitude[index_of(p.label)] * scr_kernel(ts - onset);
    }
    eda[i] = std::max(0.05, v + gaussian(rng, 0.5 * config.noise_sd));
  }
  rec.channels.emplace(ChannelKind::Eda, Channel{ChannelKind::Eda, kEdaRate, start_time, std::move(eda)});

  // TEMP: nearly identity-free slow signal.
  const auto n_temp = static_cast<std::size_t>(std::ceil(total_s * kTempRate));
  const double temp_session = uniform(rng, -0.6, 0.6);
  const auto temp_wander = ou_noise(rng, n_temp, kTempRate, 0.2, 30.0);
  std::vector<double> temp(n_temp);
  for (std::size_t i = 0; i < n_temp; ++i) {
    temp[i] = profile.temp_base + temp_session + temp_wander[i] + gaussian(rng, 0.2 * config.noise_sd);
  }
  rec.channels.emplace(ChannelKind::Temp, Channel{ChannelKind::Temp, kTempRate, start_time, std::move(temp)});
  return rec;
}

}  // namespace detail

inline SynthDataset synth_generate(const SynthConfig& config) {
  config.validate();
  const auto profiles = make_subject_profiles(config);
  SynthDataset out;
  for (std::size_t s = 0; s < config.n_subjects; ++s) {
    for (std::size_t k = 0; k < config.n_sessions; ++k) {
      ingest::RecordingTruth truth;
      auto rec = detail::make_session(config, profiles[s], s, k, truth);
      truth.subject_id = rec.subject_id;
      truth.session_id = rec.session_id;
      out.recordings.push_back(std::move(rec));
      out.truth.push_back(std::move(truth));
    }
  }
  return out;
}

}  // namespace pri::synth
