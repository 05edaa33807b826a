#pragma once

// Derived physiological signal kinds: BVP, IBI, HR and BR from PPG; tonic and
// phasic components from EDA. All functions are deterministic.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pri/dsp.hpp"
#include "pri/error.hpp"
#include "pri/ingest.hpp"
#include "pri/numeric.hpp"

namespace pri::physio {

enum class SignalKind { Ppg, Hr, Br, Bvp, Ibi, Eda, Tc, Pc, Temp };

inline constexpr std::array<SignalKind, 9> kAllSignalKinds = {
    SignalKind::Ppg, SignalKind::Hr, SignalKind::Br, SignalKind::Bvp, SignalKind::Ibi,
    SignalKind::Eda, SignalKind::Tc, SignalKind::Pc, SignalKind::Temp};

/// Column labels in report order.
inline std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::Ppg: return "PPG";
    case SignalKind::Hr: return "HR";
    case SignalKind::Br: return "BR";
    case SignalKind::Bvp: return "BVP";
    case SignalKind::Ibi: return "IBI";
    case SignalKind::Eda: return "EDA";
    case SignalKind::Tc: return "TC";
    case SignalKind::Pc: return "PC";
    case SignalKind::Temp: return "Temp";
  }
  return "?";
}

inline std::optional<SignalKind> parse_signal_kind(std::string_view s) {
  for (auto k : kAllSignalKinds) {
    if (to_string(k) == s) return k;
  }
  if (s == "TEMP") return SignalKind::Temp;
  return std::nullopt;
}

/// The raw channel a signal kind is derived from.
inline ingest::ChannelKind source_channel(SignalKind k) {
  switch (k) {
    case SignalKind::Eda:
    case SignalKind::Tc:
    case SignalKind::Pc: return ingest::ChannelKind::Eda;
    case SignalKind::Temp: return ingest::ChannelKind::Temp;
    default: return ingest::ChannelKind::Ppg;
  }
}

/// A derived series. Uniform when `times` is empty (sample i at start_time + i/rate);
/// otherwise an event series with values[i] observed at times[i] and rate 0.
/// Missing values are NaN.
struct DerivedSeries {
  SignalKind kind = SignalKind::Ppg;
  double rate = 0.0;
  double start_time = 0.0;
  std::vector<double> values;
  std::vector<double> times;

  bool uniform() const { return times.empty(); }
  double time_of(std::size_t i) const { return uniform() ? start_time + static_cast<double>(i) / rate : times[i]; }
  double duration() const { return static_cast<double>(values.size()) / rate; }
};

inline DerivedSeries from_channel(const ingest::Channel& ch, SignalKind kind) {
  return {kind, ch.rate, ch.start_time, ch.values, {}};
}

// Plausibility limits.
inline constexpr double kMinIbi = 0.25, kMaxIbi = 2.4;
inline constexpr double kMinHr = 25.0, kMaxHr = 240.0;
inline constexpr double kMinBr = 4.0, kMaxBr = 60.0;
/// Intervals deviating from the running median of their neighbors by more than
/// this fraction are treated as missed or spurious beats.
inline constexpr double kIbiMedianTolerance = 0.4;

/// Cardiac band-pass (0.5-8 Hz, zero phase) of the PPG. Needs at least 4 s.
inline DerivedSeries derive_bvp(const DerivedSeries& ppg) {
  if (ppg.duration() < 4.0) throw InsufficientDataError("derive_bvp: need at least 4 s of PPG");
  const double high = std::min(8.0, 0.45 * ppg.rate);
  return {SignalKind::Bvp, ppg.rate, ppg.start_time, dsp::bandpass_filtfilt(ppg.values, ppg.rate, 0.5, high), {}};
}

/// Systolic peak times (seconds) of a BVP series.
inline std::vector<double> beat_times(const DerivedSeries& bvp) {
  const double sd = stddev(bvp.values);
  if (!(sd > 0.0)) return {};
  const auto min_dist = static_cast<std::size_t>(std::ceil(kMinIbi * bvp.rate));
  const auto peaks = dsp::find_peaks(bvp.values, min_dist, 0.3 * sd);
  std::vector<double> out;
  out.reserve(peaks.size());
  for (auto p : peaks) out.push_back(bvp.start_time + dsp::refine_peak(bvp.values, p) / bvp.rate);
  return out;
}

/// Inter-beat intervals as an event series stamped at the closing beat.
/// Implausible intervals and those far from the local median are dropped.
inline DerivedSeries derive_ibi(const DerivedSeries& bvp) {
  const auto beats = beat_times(bvp);
  if (beats.size() < 2) throw InsufficientDataError("derive_ibi: fewer than 2 detectable peaks");
  std::vector<double> raw(beats.size() - 1);
  for (std::size_t i = 1; i < beats.size(); ++i) raw[i - 1] = beats[i] - beats[i - 1];
  DerivedSeries out{SignalKind::Ibi, 0.0, bvp.start_time, {}, {}};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw[i];
    if (v < kMinIbi || v > kMaxIbi) continue;
    const std::size_t lo = i >= 5 ? i - 5 : 0;
    const std::size_t hi = std::min(raw.size(), i + 6);
    std::vector<double> neighborhood(raw.begin() + static_cast<std::ptrdiff_t>(lo),
                                     raw.begin() + static_cast<std::ptrdiff_t>(hi));
    const double med = median(neighborhood);
    if (std::abs(v - med) > kIbiMedianTolerance * med) continue;
    out.values.push_back(v);
    out.times.push_back(beats[i + 1]);
  }
  return out;
}

/// Heart rate on a uniform grid of step hop_s: each value is 60 / mean IBI of the
/// beats closing inside a centered window of window_s. NaN where no interval falls.
inline DerivedSeries derive_hr(const DerivedSeries& bvp, double window_s = 10.0, double hop_s = 1.0) {
  if (!(window_s > 0.0) || !(hop_s > 0.0)) throw ArgumentError("derive_hr: window and hop must be positive");
  DerivedSeries out{SignalKind::Hr, 1.0 / hop_s, bvp.start_time, {}, {}};
  const auto n = static_cast<std::size_t>(std::floor(bvp.duration() / hop_s)) + 1;
  std::optional<DerivedSeries> ibi;
  try {
    ibi = derive_ibi(bvp);
  } catch (const InsufficientDataError&) {
    out.values.assign(n, kMissing);
    return out;
  }
  out.values.resize(n);
  std::size_t lo = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tc = bvp.start_time + static_cast<double>(k) * hop_s;
    const double t0 = tc - 0.5 * window_s, t1 = tc + 0.5 * window_s;
    while (lo < ibi->times.size() && ibi->times[lo] < t0) ++lo;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = lo; i < ibi->times.size() && ibi->times[i] < t1; ++i) {
      sum += ibi->values[i];
      ++count;
    }
    if (count == 0) {
      out.values[k] = kMissing;
      continue;
    }
    const double hr = 60.0 / (sum / static_cast<double>(count));
    out.values[k] = (hr >= kMinHr && hr <= kMaxHr) ? hr : kMissing;
  }
  return out;
}

struct BrOptions {
  double band_low = 0.1;
  double band_high = 0.5;
  double grid_step = 0.005;
  double analysis_rate = 4.0;
  /// Spectral peak must reach this multiple of the median in-band power.
  double peak_to_median = 2.0;
  /// Respiratory-band RMS must reach this fraction of the mean pulse envelope.
  double min_relative_rms = 0.02;
};

/// Breathing rate from the respiratory modulation of the PPG. Two candidate
/// respiratory signals are formed (baseline wander and pulse-amplitude envelope),
/// band-passed to 0.1-0.5 Hz; per hop the more prominent spectral peak wins.
inline DerivedSeries derive_br(const DerivedSeries& ppg, double window_s = 30.0, double hop_s = 1.0,
                               const BrOptions& opt = {}) {
  if (ppg.duration() < window_s) throw InsufficientDataError("derive_br: PPG shorter than the analysis window");
  const double fs = ppg.rate;
  const auto baseline = dsp::lowpass_filtfilt(ppg.values, fs, opt.band_high);
  auto cardiac = dsp::bandpass_filtfilt(ppg.values, fs, 0.5, std::min(8.0, 0.45 * fs));
  for (double& v : cardiac) v = std::abs(v);
  const auto envelope = dsp::lowpass_filtfilt(cardiac, fs, 0.6);

  // Decimate to the analysis rate (both inputs are already low-passed).
  const double step = fs / opt.analysis_rate;
  const auto n_dec = static_cast<std::size_t>(std::floor(static_cast<double>(ppg.values.size() - 1) / step)) + 1;
  std::vector<double> base_d(n_dec), env_d(n_dec);
  for (std::size_t i = 0; i < n_dec; ++i) {
    const auto j = static_cast<std::size_t>(std::lround(static_cast<double>(i) * step));
    base_d[i] = baseline[std::min(j, baseline.size() - 1)];
    env_d[i] = envelope[std::min(j, envelope.size() - 1)];
  }
  const auto resp_base = dsp::bandpass_filtfilt(base_d, opt.analysis_rate, opt.band_low, opt.band_high);
  const auto resp_env = dsp::bandpass_filtfilt(env_d, opt.analysis_rate, opt.band_low, opt.band_high);

  std::vector<double> freqs;
  for (double f = opt.band_low; f <= opt.band_high + 1e-12; f += opt.grid_step) freqs.push_back(f);

  DerivedSeries out{SignalKind::Br, 1.0 / hop_s, ppg.start_time, {}, {}};
  const auto n = static_cast<std::size_t>(std::floor(ppg.duration() / hop_s)) + 1;
  out.values.assign(n, kMissing);
  const double half = 0.5 * window_s * opt.analysis_rate;
  for (std::size_t k = 0; k < n; ++k) {
    const double center = static_cast<double>(k) * hop_s * opt.analysis_rate;
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(center - half)));
    const auto hi = std::min(n_dec, static_cast<std::size_t>(std::max(0.0, std::ceil(center + half))));
    if (hi <= lo || static_cast<double>(hi - lo) < half) continue;
    const std::span<const double> env_win(env_d.data() + lo, hi - lo);
    const double ref = mean(env_win);
    if (!(ref > 0.0)) continue;
    double best_ratio = 0.0, best_freq = 0.0;
    for (const auto* resp : {&resp_base, &resp_env}) {
      const std::span<const double> win(resp->data() + lo, hi - lo);
      const auto x = dsp::detrend(win);
      if (rms(x) < opt.min_relative_rms * ref) continue;
      const auto power = dsp::power_at(x, opt.analysis_rate, freqs);
      const double med = median(std::span<const double>(power));
      std::size_t arg = 0;
      for (std::size_t i = 1; i < power.size(); ++i) {
        if (power[i] > power[arg]) arg = i;
      }
      // Band-edge maxima are leakage from trends, not spectral peaks.
      if (arg == 0 || arg + 1 == power.size()) continue;
      if (!(med > 0.0) || power[arg] < opt.peak_to_median * med) continue;
      const double ratio = power[arg] / med;
      if (ratio <= best_ratio) continue;
      double f = freqs[arg];
      const double a = power[arg - 1], b = power[arg], c = power[arg + 1];
      const double denom = a - 2.0 * b + c;
      if (denom < 0.0) f += 0.5 * (a - c) / denom * opt.grid_step;
      best_ratio = ratio;
      best_freq = f;
    }
    if (best_ratio > 0.0) {
      const double br = best_freq * 60.0;
      if (br >= kMinBr && br <= kMaxBr) out.values[k] = br;
    }
  }
  return out;
}

/// Tonic (sliding median, ~4 s window, edge-padded) and phasic (EDA - tonic)
/// components. tonic[i] + phasic[i] == eda[i] holds exactly in floating point.
/// A sample below half its local median caps the tonic at twice the sample.
inline std::pair<DerivedSeries, DerivedSeries> decompose_eda(const DerivedSeries& eda) {
  if (eda.duration() < 8.0) throw InsufficientDataError("decompose_eda: need at least 8 s of EDA");
  const std::size_t n = eda.values.size();
  const auto half = static_cast<std::size_t>(std::floor(4.0 * eda.rate / 2.0));
  DerivedSeries tonic{SignalKind::Tc, eda.rate, eda.start_time, std::vector<double>(n), {}};
  DerivedSeries phasic{SignalKind::Pc, eda.rate, eda.start_time, std::vector<double>(n), {}};
  std::vector<double> buf(2 * half + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < buf.size(); ++k) {
      const auto j = static_cast<std::ptrdiff_t>(i + k) - static_cast<std::ptrdiff_t>(half);
      buf[k] = eda.values[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n) - 1))];
    }
    const double x = eda.values[i];
    double t = median(buf);
    double p = x - t;
    t = x - p;
    if (t + p != x) {
      // Only reachable when the sample is below half its local median; there the
      // tonic is capped at twice the sample so both parts are exactly representable.
      t = 2.0 * x;
      p = x - t;
      if (t + p != x) {
        t = x;
        p = 0.0;
      }
    }
    tonic.values[i] = t;
    phasic.values[i] = p;
  }
  return {std::move(tonic), std::move(phasic)};
}

/// Event series -> uniform grid at `rate`, linear between events; NaN outside the
/// event span or across event gaps longer than max_gap_s.
inline DerivedSeries events_to_uniform(const DerivedSeries& events, double start_time, double duration, double rate,
                                       double max_gap_s = 5.0) {
  DerivedSeries out{events.kind, rate, start_time, {}, {}};
  const auto n = static_cast<std::size_t>(std::floor(duration * rate));
  out.values.assign(n, kMissing);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = start_time + static_cast<double>(i) / rate;
    while (j + 1 < events.times.size() && events.times[j + 1] <= t) ++j;
    if (events.times.empty() || t < events.times.front() || t > events.times.back()) continue;
    if (j + 1 >= events.times.size()) {
      out.values[i] = events.values.back();
      continue;
    }
    const double ta = events.times[j], tb = events.times[j + 1];
    if (tb - ta > max_gap_s) continue;
    const double f = (t - ta) / (tb - ta);
    out.values[i] = events.values[j] + f * (events.values[j + 1] - events.values[j]);
  }
  return out;
}

inline void require_channel(const ingest::SensorRecording& rec, SignalKind kind) {
  const auto ch = source_channel(kind);
  if (!rec.has(ch)) {
    throw MissingChannelError(std::string(to_string(kind)) + " needs the " + std::string(ingest::to_string(ch)) +
                              " channel, absent in " + rec.subject_id + "/" + rec.session_id);
  }
}

/// Signal `kind` for the whole recording with fixed defaults (HR: 10 s / 1 s;
/// BR: 30 s / 1 s; IBI resampled to 4 Hz).
inline DerivedSeries select_signal(const ingest::SensorRecording& rec, SignalKind kind) {
  require_channel(rec, kind);
  const auto& src = rec.channel(source_channel(kind));
  const auto raw = from_channel(src, kind);
  switch (kind) {
    case SignalKind::Ppg:
    case SignalKind::Eda:
    case SignalKind::Temp: return raw;
    case SignalKind::Bvp: return derive_bvp(raw);
    case SignalKind::Hr: return derive_hr(derive_bvp(raw), 10.0, 1.0);
    case SignalKind::Br: return derive_br(raw, 30.0, 1.0);
    case SignalKind::Ibi: {
      const auto bvp = derive_bvp(raw);
      try {
        return events_to_uniform(derive_ibi(bvp), src.start_time, src.duration(), 4.0);
      } catch (const InsufficientDataError&) {
        DerivedSeries out{SignalKind::Ibi, 4.0, src.start_time, {}, {}};
        out.values.assign(static_cast<std::size_t>(std::floor(src.duration() * 4.0)), kMissing);
        return out;
      }
    }
    case SignalKind::Tc: return decompose_eda(raw).first;
    case SignalKind::Pc: return decompose_eda(raw).second;
  }
  throw ArgumentError("unknown signal kind");
}

/// Samples of a uniform series inside ACC samples [start, end) of `rec`.
inline std::vector<double> slice_series(const DerivedSeries& s, const ingest::SensorRecording& rec, std::size_t start,
                                        std::size_t end) {
  if (end < start) throw ArgumentError("slice_series: inverted indices");
  const auto& acc = rec.acc_x();
  auto [lo, hi] = ingest::index_range(s.start_time, s.rate, s.values.size(), acc.time_of(start), acc.time_of(end));
  return {s.values.begin() + static_cast<std::ptrdiff_t>(lo), s.values.begin() + static_cast<std::ptrdiff_t>(hi)};
}

}  // namespace pri::physio
