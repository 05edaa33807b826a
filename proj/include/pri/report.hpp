#pragma once

// Experiment artifacts: JSON (round-trippable), the signal-by-dataset CSV table,
// an SVG learning curve and a run manifest.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pri/error.hpp"
#include "pri/experiment.hpp"
#include "pri/ingest.hpp"

#ifndef PRI_VERSION
#define PRI_VERSION "0.1.0"
#endif

namespace pri::report {

namespace fs = std::filesystem;
using nlohmann::json;
using attack::CellResult;
using attack::CurvePoint;
using attack::ExperimentReport;
using attack::RepetitionRecord;
using physio::SignalKind;

inline constexpr const char* kReportFormat = "pri-experiment-report";
inline constexpr int kReportVersion = 1;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline SignalKind kind_from_string(const std::string& s) {
  auto k = physio::parse_signal_kind(s);
  if (!k) throw FormatError("unknown signal kind '" + s + "'");
  return *k;
}

// ---------------------------------------------------------------------------
// JSON

inline json repetition_to_json(const RepetitionRecord& r) {
  json j;
  j["repetition"] = r.repetition;
  j["n_episodes"] = r.n_episodes;
  j["accuracy"] = r.accuracy;
  j["verification_accuracy"] = r.verification_accuracy ? json(*r.verification_accuracy) : json(nullptr);
  j["n_train_pairs"] = r.n_train_pairs;
  j["n_test_windows"] = r.n_test_windows;
  j["train_pair_windows"] = r.train_pair_windows;
  j["test_windows"] = r.test_windows;
  j["loss_history"] = r.loss_history;
  return j;
}

inline RepetitionRecord repetition_from_json(const json& j) {
  RepetitionRecord r;
  r.repetition = j.at("repetition").get<std::size_t>();
  r.n_episodes = j.at("n_episodes").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  if (!j.at("verification_accuracy").is_null()) r.verification_accuracy = j.at("verification_accuracy").get<double>();
  r.n_train_pairs = j.at("n_train_pairs").get<std::size_t>();
  r.n_test_windows = j.at("n_test_windows").get<std::size_t>();
  r.train_pair_windows = j.at("train_pair_windows").get<std::vector<std::size_t>>();
  r.test_windows = j.at("test_windows").get<std::vector<std::size_t>>();
  r.loss_history = j.at("loss_history").get<std::vector<double>>();
  return r;
}

inline json to_json(const ExperimentReport& rep) {
  json j;
  j["format"] = kReportFormat;
  j["version"] = kReportVersion;
  j["datasets"] = rep.datasets;
  j["metadata"] = rep.metadata;
  json cells = json::array();
  for (const auto& c : rep.cells) {
    json cj;
    cj["dataset"] = c.dataset;
    cj["signal"] = physio::to_string(c.kind);
    cj["absent"] = c.absent;
    if (c.absent) cj["absent_reason"] = c.absent_reason;
    cj["n_episodes"] = c.n_episodes;
    cj["accuracies"] = c.accuracies;
    cj["mean"] = c.mean();
    cj["sd"] = c.sd();
    json reps = json::array();
    for (const auto& r : c.repetitions) reps.push_back(repetition_to_json(r));
    cj["repetitions"] = std::move(reps);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  json curve = json::array();
  for (const auto& p : rep.curve) {
    curve.push_back({{"dataset", p.dataset},
                     {"signal", physio::to_string(p.kind)},
                     {"n_episodes", p.n_episodes},
                     {"accuracies", p.accuracies},
                     {"mean", p.mean()},
                     {"sd", p.sd()}});
  }
  j["curve"] = std::move(curve);
  return j;
}

/// Mean and SD are recomputed from the raw accuracies; stored values are checked against them.
inline ExperimentReport from_json(const json& j) {
  try {
    if (j.at("format") != kReportFormat) throw FormatError("not an experiment report");
    if (j.at("version").get<int>() != kReportVersion) throw FormatError("unsupported report version");
    ExperimentReport rep;
    rep.datasets = j.at("datasets").get<std::vector<std::string>>();
    rep.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    auto check_summary = [](const json& cj, double mean, double sd) {
      if (std::abs(cj.at("mean").get<double>() - mean) > 1e-9 || std::abs(cj.at("sd").get<double>() - sd) > 1e-9) {
        throw FormatError("stored mean/SD disagree with the raw accuracies");
      }
    };
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.dataset = cj.at("dataset").get<std::string>();
      c.kind = kind_from_string(cj.at("signal").get<std::string>());
      c.absent = cj.at("absent").get<bool>();
      if (c.absent) c.absent_reason = cj.at("absent_reason").get<std::string>();
      c.n_episodes = cj.at("n_episodes").get<std::size_t>();
      c.accuracies = cj.at("accuracies").get<std::vector<double>>();
      for (const auto& rj : cj.at("repetitions")) c.repetitions.push_back(repetition_from_json(rj));
      check_summary(cj, c.mean(), c.sd());
      rep.cells.push_back(std::move(c));
    }
    for (const auto& pj : j.at("curve")) {
      CurvePoint p;
      p.dataset = pj.at("dataset").get<std::string>();
      p.kind = kind_from_string(pj.at("signal").get<std::string>());
      p.n_episodes = pj.at("n_episodes").get<std::size_t>();
      p.accuracies = pj.at("accuracies").get<std::vector<double>>();
      check_summary(pj, p.mean(), p.sd());
      rep.curve.push_back(std::move(p));
    }
    return rep;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Table

inline std::string format_cell(const CellResult& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f\xC2\xB1%.2f", c.mean(), c.sd());
  return buf;
}

/// Row per dataset, column per signal kind; absent or not-run cells are empty.
inline std::string to_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out << "dataset";
  for (auto k : physio::kAllSignalKinds) out << ',' << physio::to_string(k);
  out << '\n';
  for (const auto& ds : rep.datasets) {
    out << ds;
    for (auto k : physio::kAllSignalKinds) {
      out << ',';
      for (const auto& c : rep.cells) {
        if (c.dataset == ds && c.kind == k && !c.absent) {
          out << format_cell(c);
          break;
        }
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Learning-curve plot

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// Mean accuracy vs number of training episodes, one series per (dataset, signal), with
/// +-SD error bars.
inline std::string curve_svg(const std::vector<CurvePoint>& curve) {
  constexpr double W = 640, H = 420, L = 60, R = 170, T = 30, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::map<std::pair<std::string, std::string>, std::vector<const CurvePoint*>> series;
  double xmax = 1.0;
  for (const auto& p : curve) {
    series[{p.dataset, std::string(physio::to_string(p.kind))}].push_back(&p);
    xmax = std::max(xmax, static_cast<double>(p.n_episodes));
  }
  auto sx = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto sy = [&](double y) { return H - B - (H - T - B) * std::clamp(y, 0.0, 100.0) / 100.0; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int y = 0; y <= 100; y += 20) {
    s << "<line x1=\"" << L - 4 << "\" y1=\"" << fmt(sy(y)) << "\" x2=\"" << W - R << "\" y2=\"" << fmt(sy(y))
      << "\" stroke=\"#ddd\"/><text x=\"" << L - 8 << "\" y=\"" << fmt(sy(y) + 4) << "\" text-anchor=\"end\">" << y
      << "</text>\n";
  }
  std::set<std::size_t> ticks;
  for (const auto& p : curve) ticks.insert(p.n_episodes);
  for (auto x : ticks) {
    s << "<text x=\"" << fmt(sx(static_cast<double>(x))) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << x
      << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\"># gesture windows in training</text>\n";
  s << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">accuracy (%)</text>\n";

  std::size_t idx = 0;
  for (const auto& [key, pts] : series) {
    const char* color = colors[idx % std::size(colors)];
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->n_episodes < b->n_episodes; });
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      s << (i ? " " : "") << fmt(sx(static_cast<double>(sorted[i]->n_episodes))) << ',' << fmt(sy(sorted[i]->mean()));
    }
    s << "\"/>\n";
    for (auto* p : sorted) {
      const double x = sx(static_cast<double>(p->n_episodes));
      s << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(sy(p->mean() - p->sd())) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(sy(p->mean() + p->sd())) << "\" stroke=\"" << color << "\"/>";
      s << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(sy(p->mean())) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 18.0 * static_cast<double>(idx);
    s << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly << "\" stroke=\""
      << color << "\" stroke-width=\"2\"/><text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << key.first << ' '
      << key.second << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Manifest and rendering

/// Hash of the canonical (sorted-key, compact) dump of a config.
inline std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

inline json manifest(const std::string& command, const json& config, std::uint64_t seed,
                     const std::vector<std::string>& artifacts) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(config);
  m["seed"] = seed;
  m["versions"] = {{"pri", PRI_VERSION}, {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["artifacts"] = artifacts;
  return m;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

/// Writes report.json, table.csv and (when a curve is present) learning_curve.svg.
/// Returns the written file names.
inline std::vector<std::string> render_report(const ExperimentReport& rep, const fs::path& out_dir) {
  ensure_dir(out_dir);
  std::vector<std::string> files{"report.json", "table.csv"};
  ingest::detail::write_file(out_dir / "report.json", to_json(rep).dump(2) + "\n");
  ingest::detail::write_file(out_dir / "table.csv", to_csv(rep));
  if (!rep.curve.empty()) {
    ingest::detail::write_file(out_dir / "learning_curve.svg", curve_svg(rep.curve));
    files.push_back("learning_curve.svg");
  }
  return files;
}

inline ExperimentReport load_report(const fs::path& path) {
  try {
    return from_json(json::parse(ingest::detail::read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace pri::report
