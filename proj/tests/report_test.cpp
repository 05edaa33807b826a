#include "pri/report.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace pri;
using namespace pri::report;

namespace {

ExperimentReport sample_report() {
  ExperimentReport rep;
  rep.datasets = {"D1", "D4"};
  rep.metadata = {{"config_hash", "00ff"}, {"seed", "7"}};
  CellResult br;
  br.dataset = "D1";
  br.kind = SignalKind::Br;
  br.n_episodes = 100;
  br.accuracies = {68.0, 72.5, 74.25};
  RepetitionRecord r;
  r.repetition = 0;
  r.n_episodes = 100;
  r.accuracy = 0.68;
  r.verification_accuracy = 0.9;
  r.n_train_pairs = 12;
  r.n_test_windows = 50;
  r.train_pair_windows = {1, 2, 5};
  r.test_windows = {3, 4};
  r.loss_history = {2.5, 1.0 / 3.0};
  br.repetitions = {r};
  r.repetition = 1;
  r.verification_accuracy.reset();
  br.repetitions.push_back(r);
  CellResult eda;
  eda.dataset = "D4";
  eda.kind = SignalKind::Eda;
  eda.absent = true;
  eda.absent_reason = "EDA needs the EDA channel";
  CellResult hr;
  hr.dataset = "D4";
  hr.kind = SignalKind::Hr;
  hr.accuracies = {50.0};
  rep.cells = {br, eda, hr};
  rep.curve = {{"D1", SignalKind::Br, 10, {40.0, 45.0}}, {"D1", SignalKind::Br, 100, {70.0, 72.0}}};
  return rep;
}

}  // namespace

TEST(ReportJson, RoundTripEqual) {
  const auto rep = sample_report();
  const auto back = from_json(json::parse(to_json(rep).dump()));
  EXPECT_EQ(back, rep);
  EXPECT_FALSE(back.cells[0].repetitions[1].verification_accuracy.has_value());
}

TEST(ReportJson, SummaryRecomputesFromRaw) {
  auto j = to_json(sample_report());
  EXPECT_NEAR(j["cells"][0]["mean"].get<double>(), (68.0 + 72.5 + 74.25) / 3.0, 1e-12);
  j["cells"][0]["mean"] = 99.0;
  EXPECT_THROW(from_json(j), FormatError);
}

TEST(ReportJson, RejectsForeignDocuments) {
  EXPECT_THROW(from_json(json{{"format", "other"}}), FormatError);
  auto j = to_json(sample_report());
  j["cells"][0]["signal"] = "XYZ";
  EXPECT_THROW(from_json(j), FormatError);
  j = to_json(sample_report());
  j.erase("curve");
  EXPECT_THROW(from_json(j), FormatError);
}

TEST(ReportCsv, TableLayout) {
  const auto csv = to_csv(sample_report());
  std::istringstream in(csv);
  std::string header, d1, d4, extra;
  std::getline(in, header);
  std::getline(in, d1);
  std::getline(in, d4);
  EXPECT_EQ(header, "dataset,PPG,HR,BR,BVP,IBI,EDA,TC,PC,Temp");
  // mean 71.583, sample SD sqrt(20.79/2) = 3.22
  EXPECT_EQ(d1, "D1,,,71.58\xC2\xB1" "3.22,,,,,,");
  // absent EDA stays empty, not zero; single repetition -> SD 0
  EXPECT_EQ(d4, "D4,,50.00\xC2\xB1" "0.00,,,,,,,");
  EXPECT_FALSE(std::getline(in, extra));
}

TEST(ReportSvg, OneSeriesWithPoints) {
  const auto svg = curve_svg(sample_report().curve);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 5, true);
  std::size_t circles = 0;
  for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
  EXPECT_EQ(circles, 2u);
  EXPECT_NE(svg.find("D1 BR"), std::string::npos);
}

TEST(Render, WritesArtifactsDeterministically) {
  test::TempDir dir;
  const auto files = render_report(sample_report(), dir.path() / "a");
  render_report(sample_report(), dir.path() / "b");
  EXPECT_EQ(files, (std::vector<std::string>{"report.json", "table.csv", "learning_curve.svg"}));
  for (const auto& f : files) {
    EXPECT_EQ(ingest::detail::read_file(dir.path() / "a" / f), ingest::detail::read_file(dir.path() / "b" / f)) << f;
  }
  EXPECT_EQ(load_report(dir.path() / "a" / "report.json"), sample_report());
}

TEST(Render, UnwritablePathIsIoError) {
  test::TempDir dir;
  test::write_text(dir.path() / "file", "x");
  EXPECT_THROW(render_report(sample_report(), dir.path() / "file" / "sub"), IoError);
}

TEST(Manifest, HashStableAndSensitive) {
  const json a = {{"seed", 1}, {"x", {1, 2}}};
  const json b = json::parse(R"({"x":[1,2],"seed":1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(json{{"seed", 2}, {"x", {1, 2}}}));
  const auto m = manifest("attack", a, 1, {"report.json"});
  EXPECT_EQ(m["config_hash"], config_hash(a));
  EXPECT_FALSE(m.contains("timestamp"));
  // FNV-1a reference vectors
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
