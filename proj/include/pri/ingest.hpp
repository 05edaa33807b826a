#pragma once

// Wearable recordings: channel model, E4 / generic CSV adapters, resampling and
// window slicing on the ACC master clock.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pri/error.hpp"
#include "pri/gesture_types.hpp"
#include "pri/numeric.hpp"

namespace pri::ingest {

namespace fs = std::filesystem;

enum class ChannelKind { AccX, AccY, AccZ, Ppg, Eda, Temp };

inline std::string_view to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::AccX: return "ACC_X";
    case ChannelKind::AccY: return "ACC_Y";
    case ChannelKind::AccZ: return "ACC_Z";
    case ChannelKind::Ppg: return "PPG";
    case ChannelKind::Eda: return "EDA";
    case ChannelKind::Temp: return "TEMP";
  }
  return "?";
}

enum class Provenance { E4Export, Synthetic, GenericCsv };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::E4Export: return "E4_EXPORT";
    case Provenance::Synthetic: return "SYNTHETIC";
    case Provenance::GenericCsv: return "GENERIC_CSV";
  }
  return "?";
}

/// Uniformly sampled series. ACC in g, PPG in device units, EDA in uS, TEMP in C.
struct Channel {
  ChannelKind kind = ChannelKind::AccX;
  double rate = 0.0;
  double start_time = 0.0;
  std::vector<double> values;

  double time_of(std::size_t i) const { return start_time + static_cast<double>(i) / rate; }
  double duration() const { return static_cast<double>(values.size()) / rate; }
  bool operator==(const Channel&) const = default;
};

struct SensorRecording {
  std::string subject_id;
  std::string session_id;
  std::map<ChannelKind, Channel> channels;
  Provenance provenance = Provenance::Synthetic;

  bool has(ChannelKind k) const { return channels.count(k) != 0; }

  const Channel& channel(ChannelKind k) const {
    auto it = channels.find(k);
    if (it == channels.end()) {
      throw MissingChannelError("recording " + subject_id + "/" + session_id + " has no " +
                                std::string(to_string(k)) + " channel");
    }
    return it->second;
  }

  const Channel& acc_x() const { return channel(ChannelKind::AccX); }
  const Channel& acc_y() const { return channel(ChannelKind::AccY); }
  const Channel& acc_z() const { return channel(ChannelKind::AccZ); }
  std::size_t acc_length() const { return acc_x().values.size(); }
  double acc_rate() const { return acc_x().rate; }

  /// Throws FormatError when the recording violates the channel invariants.
  void validate() const {
    if (subject_id.empty()) throw FormatError("recording without subject id");
    for (ChannelKind k : {ChannelKind::AccX, ChannelKind::AccY, ChannelKind::AccZ}) {
      if (!has(k)) throw FormatError("recording " + subject_id + " lacks " + std::string(to_string(k)));
    }
    const Channel& x = acc_x();
    for (const Channel* c : {&acc_y(), &acc_z()}) {
      if (c->rate != x.rate || c->start_time != x.start_time || c->values.size() != x.values.size()) {
        throw FormatError("ACC axes of " + subject_id + " disagree in rate, start or length");
      }
    }
    for (const auto& [kind, ch] : channels) {
      if (!(ch.rate > 0.0)) throw FormatError(std::string(to_string(kind)) + " rate must be positive");
      if (ch.values.empty()) throw FormatError(std::string(to_string(kind)) + " has no samples");
    }
  }

  bool operator==(const SensorRecording&) const = default;
};

// ---------------------------------------------------------------------------
// Resampling

/// Linear interpolation of `values` onto `dst_len` equally spaced points that span
/// the original duration. Endpoints are preserved.
inline std::vector<double> resample(std::span<const double> values, std::size_t dst_len) {
  if (dst_len < 2) throw ArgumentError("resample: dst_len must be >= 2");
  if (values.size() < 2) throw ArgumentError("resample: need at least 2 source samples");
  const std::size_t n = values.size();
  std::vector<double> out(dst_len);
  if (n == dst_len) {
    std::copy(values.begin(), values.end(), out.begin());
    return out;
  }
  const double scale = static_cast<double>(n - 1) / static_cast<double>(dst_len - 1);
  for (std::size_t i = 0; i < dst_len; ++i) {
    const double pos = static_cast<double>(i) * scale;
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    if (lo >= n - 1) lo = n - 2;
    const double frac = pos - static_cast<double>(lo);
    out[i] = values[lo] + (values[lo + 1] - values[lo]) * frac;
  }
  out.front() = values.front();
  out.back() = values.back();
  return out;
}

/// Interpolates over runs of missing values no longer than `max_gap_s`. Leading and
/// trailing runs are filled with the nearest valid value under the same limit.
/// Returns nullopt when any run is longer, or when nothing is valid.
inline std::optional<std::vector<double>> fill_gaps(std::span<const double> values, double rate,
                                                    double max_gap_s) {
  std::vector<double> out(values.begin(), values.end());
  const std::size_t n = out.size();
  const double max_run = max_gap_s * rate;
  std::size_t i = 0;
  bool any_valid = false;
  while (i < n) {
    if (!is_missing(out[i])) {
      any_valid = true;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_missing(out[j])) ++j;
    if (static_cast<double>(j - i) > max_run) return std::nullopt;
    const bool has_left = i > 0;
    const bool has_right = j < n;
    for (std::size_t k = i; k < j; ++k) {
      if (has_left && has_right) {
        const double t = static_cast<double>(k - i + 1) / static_cast<double>(j - i + 1);
        out[k] = out[i - 1] + (out[j] - out[i - 1]) * t;
      } else if (has_left) {
        out[k] = out[i - 1];
      } else if (has_right) {
        out[k] = out[j];
      }
    }
    i = j;
  }
  if (!any_valid) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// Slicing on the ACC clock

/// Sample index range [first, last) of a series (start_time, rate, n) whose
/// timestamps fall in [t0, t1).
inline std::pair<std::size_t, std::size_t> index_range(double start_time, double rate, std::size_t n,
                                                       double t0, double t1) {
  constexpr double kTol = 1e-9;
  auto to_index = [&](double t) {
    const double pos = std::ceil((t - start_time) * rate - kTol);
    if (pos <= 0.0) return std::size_t{0};
    return std::min(n, static_cast<std::size_t>(pos));
  };
  return {to_index(t0), to_index(t1)};
}

/// All samples of channel `kind` whose timestamps fall inside ACC samples
/// [start_acc_index, end_acc_index).
inline std::vector<double> slice_window(const SensorRecording& rec, ChannelKind kind,
                                        std::size_t start_acc_index, std::size_t end_acc_index) {
  if (end_acc_index < start_acc_index) throw ArgumentError("slice_window: inverted indices");
  const Channel& ch = rec.channel(kind);
  const Channel& acc = rec.acc_x();
  if (end_acc_index > acc.values.size()) throw ArgumentError("slice_window: index beyond ACC length");
  const double t0 = acc.time_of(start_acc_index);
  const double t1 = acc.time_of(end_acc_index);
  auto [lo, hi] = index_range(ch.start_time, ch.rate, ch.values.size(), t0, t1);
  return {ch.values.begin() + static_cast<std::ptrdiff_t>(lo),
          ch.values.begin() + static_cast<std::ptrdiff_t>(hi)};
}

// ---------------------------------------------------------------------------
// CSV helpers

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

struct CsvColumns {
  double start_time = 0.0;
  double rate = 0.0;
  std::vector<std::vector<double>> columns;
};

/// Reads the two-header-row layout shared by E4 exports and the generic adapter.
inline CsvColumns read_header_csv(const fs::path& path, std::size_t expected_columns) {
  const std::string text = read_file(path);
  const std::string name = path.filename().string();
  std::istringstream in(text);
  std::string line;
  auto header_value = [&](const char* what) {
    if (!std::getline(in, line)) throw FormatError(name + ": missing " + std::string(what) + " header row");
    auto cells = split(line);
    if (cells.size() != expected_columns) {
      throw FormatError(name + ": " + what + " header row has " + std::to_string(cells.size()) +
                        " columns, expected " + std::to_string(expected_columns));
    }
    auto v = parse_double(cells[0]);
    if (!v) throw FormatError(name + ": malformed " + std::string(what) + " header row");
    for (auto c : cells) {
      if (parse_double(c) != v) throw FormatError(name + ": inconsistent " + std::string(what) + " header row");
    }
    return *v;
  };
  CsvColumns out;
  out.start_time = header_value("start time");
  out.rate = header_value("sample rate");
  if (!(out.rate > 0.0)) throw FormatError(name + ": sample rate must be positive");
  out.columns.assign(expected_columns, {});
  std::size_t row = 2;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != expected_columns) {
      throw FormatError(name + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " columns");
    }
    for (std::size_t c = 0; c < expected_columns; ++c) {
      auto v = parse_double(cells[c]);
      if (!v) throw FormatError(name + ": malformed value on row " + std::to_string(row));
      out.columns[c].push_back(*v);
    }
  }
  if (out.columns[0].empty()) throw FormatError(name + ": no samples");
  return out;
}

inline std::string header_rows(double start_time, double rate, std::size_t columns) {
  std::string out;
  for (double v : {start_time, rate}) {
    for (std::size_t c = 0; c < columns; ++c) {
      if (c) out += ", ";
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Empatica E4 export layout

/// Raw E4 accelerometer units per g.
inline constexpr double kE4AccUnitsPerG = 64.0;

struct E4Options {
  double acc_units_per_g = kE4AccUnitsPerG;
};

/// Loads ACC.csv (required) plus BVP.csv, EDA.csv and TEMP.csv when present.
/// BVP.csv is treated as the PPG channel.
inline SensorRecording load_e4_recording(const fs::path& directory, const std::string& subject_id,
                                         const E4Options& opts = {}) {
  const fs::path acc_path = directory / "ACC.csv";
  if (!fs::exists(acc_path)) throw FormatError("missing ACC.csv in " + directory.string());
  SensorRecording rec;
  rec.subject_id = subject_id;
  rec.session_id = directory.filename().string();
  rec.provenance = Provenance::E4Export;

  auto acc = detail::read_header_csv(acc_path, 3);
  const ChannelKind axes[3] = {ChannelKind::AccX, ChannelKind::AccY, ChannelKind::AccZ};
  for (int a = 0; a < 3; ++a) {
    Channel ch{axes[a], acc.rate, acc.start_time, std::move(acc.columns[a])};
    for (double& v : ch.values) v /= opts.acc_units_per_g;
    rec.channels.emplace(axes[a], std::move(ch));
  }
  const std::pair<const char*, ChannelKind> optional_files[] = {
      {"BVP.csv", ChannelKind::Ppg}, {"EDA.csv", ChannelKind::Eda}, {"TEMP.csv", ChannelKind::Temp}};
  for (auto [file, kind] : optional_files) {
    const fs::path p = directory / file;
    if (!fs::exists(p)) continue;
    auto cols = detail::read_header_csv(p, 1);
    rec.channels.emplace(kind, Channel{kind, cols.rate, cols.start_time, std::move(cols.columns[0])});
  }
  rec.validate();
  return rec;
}

/// Writes a recording in E4 export layout. ACC is quantized to integer raw units.
inline void write_e4_recording(const SensorRecording& rec, const fs::path& directory,
                               const E4Options& opts = {}) {
  fs::create_directories(directory);
  const Channel& x = rec.acc_x();
  const Channel& y = rec.acc_y();
  const Channel& z = rec.acc_z();
  std::string acc = detail::header_rows(x.start_time, x.rate, 3);
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    auto q = [&](double g) { return std::to_string(static_cast<long long>(std::lround(g * opts.acc_units_per_g))); };
    acc += q(x.values[i]) + "," + q(y.values[i]) + "," + q(z.values[i]) + "\n";
  }
  detail::write_file(directory / "ACC.csv", acc);
  const std::pair<const char*, ChannelKind> optional_files[] = {
      {"BVP.csv", ChannelKind::Ppg}, {"EDA.csv", ChannelKind::Eda}, {"TEMP.csv", ChannelKind::Temp}};
  for (auto [file, kind] : optional_files) {
    if (!rec.has(kind)) continue;
    const Channel& ch = rec.channel(kind);
    std::string body = detail::header_rows(ch.start_time, ch.rate, 1);
    for (double v : ch.values) body += detail::format_double(v) + "\n";
    detail::write_file(directory / file, body);
  }
}

// ---------------------------------------------------------------------------
// Generic CSV adapter: one <KIND>.csv per channel, values in physical units.

inline SensorRecording load_generic_recording(const fs::path& directory, const std::string& subject_id) {
  SensorRecording rec;
  rec.subject_id = subject_id;
  rec.session_id = directory.filename().string();
  rec.provenance = Provenance::GenericCsv;
  for (ChannelKind kind : {ChannelKind::AccX, ChannelKind::AccY, ChannelKind::AccZ, ChannelKind::Ppg,
                           ChannelKind::Eda, ChannelKind::Temp}) {
    const fs::path p = directory / (std::string(to_string(kind)) + ".csv");
    if (!fs::exists(p)) {
      if (kind == ChannelKind::AccX || kind == ChannelKind::AccY || kind == ChannelKind::AccZ) {
        throw FormatError("missing " + p.filename().string() + " in " + directory.string());
      }
      continue;
    }
    auto cols = detail::read_header_csv(p, 1);
    rec.channels.emplace(kind, Channel{kind, cols.rate, cols.start_time, std::move(cols.columns[0])});
  }
  rec.validate();
  return rec;
}

inline void write_generic_recording(const SensorRecording& rec, const fs::path& directory) {
  fs::create_directories(directory);
  for (const auto& [kind, ch] : rec.channels) {
    std::string body = detail::header_rows(ch.start_time, ch.rate, 1);
    for (double v : ch.values) body += detail::format_double(v) + "\n";
    detail::write_file(directory / (std::string(to_string(kind)) + ".csv"), body);
  }
}

// ---------------------------------------------------------------------------
// Dataset directories: <root>/<subject>/<session>/...

enum class DatasetFormat { E4, Generic };

inline std::vector<fs::path> sorted_subdirectories(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<SensorRecording> load_dataset(const fs::path& root, DatasetFormat format) {
  std::vector<SensorRecording> out;
  for (const auto& subject_dir : sorted_subdirectories(root)) {
    const std::string subject = subject_dir.filename().string();
    for (const auto& session_dir : sorted_subdirectories(subject_dir)) {
      out.push_back(format == DatasetFormat::E4 ? load_e4_recording(session_dir, subject)
                                                : load_generic_recording(session_dir, subject));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth

struct RecordingTruth {
  std::string subject_id;
  std::string session_id;
  std::vector<GestureWindow> windows;
  bool operator==(const RecordingTruth&) const = default;
};

inline nlohmann::json windows_to_json(const std::vector<GestureWindow>& windows, bool with_confidence) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& w : windows) {
    nlohmann::json j{{"start", w.start}, {"end", w.end}, {"class", std::string(to_string(w.label))}};
    if (with_confidence) j["confidence"] = w.confidence;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::vector<GestureWindow> windows_from_json(const nlohmann::json& arr) {
  std::vector<GestureWindow> out;
  for (const auto& j : arr) {
    GestureWindow w;
    w.start = j.at("start").get<std::size_t>();
    w.end = j.at("end").get<std::size_t>();
    auto label = parse_gesture(j.at("class").get<std::string>());
    if (!label) throw FormatError("unknown gesture class " + j.at("class").get<std::string>());
    w.label = *label;
    w.confidence = j.value("confidence", 1.0);
    if (w.end <= w.start) throw FormatError("gesture window with end <= start");
    out.push_back(w);
  }
  return out;
}

inline nlohmann::json truth_to_json(const std::vector<RecordingTruth>& truth) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : truth) {
    arr.push_back({{"subject_id", t.subject_id},
                   {"session_id", t.session_id},
                   {"windows", windows_to_json(t.windows, false)}});
  }
  return arr;
}

inline std::vector<RecordingTruth> truth_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw FormatError("ground truth must be a JSON array");
  std::vector<RecordingTruth> out;
  for (const auto& j : arr) {
    out.push_back({j.at("subject_id").get<std::string>(), j.at("session_id").get<std::string>(),
                   windows_from_json(j.at("windows"))});
  }
  return out;
}

}  // namespace pri::ingest
