#include "pri/ingest.hpp"
#include "pri/synth.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pri::ingest {
namespace {

std::string acc_csv(std::size_t rows, int value = 0) {
  std::string s = "1600000000.000000, 1600000000.000000, 1600000000.000000\n32.000000, 32.000000, 32.000000\n";
  for (std::size_t i = 0; i < rows; ++i) s += std::to_string(value) + "," + std::to_string(-value) + ",64\n";
  return s;
}

TEST(LoadE4, HeaderPassThrough) {
  test::TempDir dir;
  test::write_text(dir.path() / "ACC.csv", acc_csv(320));
  const auto rec = load_e4_recording(dir.path(), "u1");
  const auto& x = rec.acc_x();
  EXPECT_EQ(x.rate, 32.0);
  EXPECT_EQ(x.values.size(), 320u);
  EXPECT_EQ(x.start_time, 1600000000.0);
  EXPECT_EQ(rec.subject_id, "u1");
  EXPECT_EQ(rec.provenance, Provenance::E4Export);
}

TEST(LoadE4, ScalesRawUnitsToG) {
  test::TempDir dir;
  test::write_text(dir.path() / "ACC.csv", acc_csv(4, 64));
  const auto rec = load_e4_recording(dir.path(), "u1");
  EXPECT_EQ(rec.acc_x().values[0], 1.0);
  EXPECT_EQ(rec.acc_y().values[0], -1.0);
  EXPECT_EQ(rec.acc_z().values[0], 1.0);
}

TEST(LoadE4, OptionalChannelsMayBeAbsent) {
  test::TempDir dir;
  test::write_text(dir.path() / "ACC.csv", acc_csv(32));
  test::write_text(dir.path() / "BVP.csv", "1600000000.0\n64.0\n1.5\n-2.25\n");
  const auto rec = load_e4_recording(dir.path(), "u1");
  EXPECT_FALSE(rec.has(ChannelKind::Eda));
  EXPECT_FALSE(rec.has(ChannelKind::Temp));
  ASSERT_TRUE(rec.has(ChannelKind::Ppg));
  EXPECT_EQ(rec.channel(ChannelKind::Ppg).values, (std::vector<double>{1.5, -2.25}));
  EXPECT_THROW(rec.channel(ChannelKind::Eda), MissingChannelError);
}

TEST(LoadE4, MissingAccIsFormatError) {
  test::TempDir dir;
  test::write_text(dir.path() / "EDA.csv", "1600000000.0\n4.0\n0.1\n");
  EXPECT_THROW(load_e4_recording(dir.path(), "u1"), FormatError);
}

TEST(LoadE4, MalformedHeaderNamesFile) {
  test::TempDir dir;
  test::write_text(dir.path() / "ACC.csv", acc_csv(8));
  test::write_text(dir.path() / "EDA.csv", "not-a-time\n4.0\n0.1\n");
  try {
    load_e4_recording(dir.path(), "u1");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("EDA.csv"), std::string::npos);
  }
}

TEST(LoadE4, NonPositiveRateRejected) {
  test::TempDir dir;
  test::write_text(dir.path() / "ACC.csv", "1600000000, 1600000000, 1600000000\n0, 0, 0\n1,2,3\n");
  EXPECT_THROW(load_e4_recording(dir.path(), "u1"), FormatError);
}

TEST(LoadE4, RoundTripWithinQuantization) {
  synth::SynthConfig cfg;
  cfg.n_subjects = 2;
  cfg.n_sessions = 1;
  cfg.gestures_per_session = 3;
  const auto data = synth::synth_generate(cfg);
  const auto& rec = data.recordings[0];
  test::TempDir dir;
  write_e4_recording(rec, dir.path() / rec.session_id);
  const auto back = load_e4_recording(dir.path() / rec.session_id, rec.subject_id);
  for (auto k : {ChannelKind::AccX, ChannelKind::AccY, ChannelKind::AccZ}) {
    const auto& a = rec.channel(k).values;
    const auto& b = back.channel(k).values;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_LE(std::abs(a[i] - b[i]), 1.0 / 128.0 + 1e-12);
  }
  for (auto k : {ChannelKind::Ppg, ChannelKind::Eda, ChannelKind::Temp}) {
    EXPECT_EQ(rec.channel(k), back.channel(k));
  }
}

TEST(GenericCsv, RoundTripIsExact) {
  synth::SynthConfig cfg;
  cfg.n_subjects = 2;
  cfg.n_sessions = 1;
  cfg.gestures_per_session = 2;
  auto rec = synth::synth_generate(cfg).recordings[1];
  rec.channels.erase(ChannelKind::Eda);
  test::TempDir dir;
  write_generic_recording(rec, dir.path() / "s");
  auto back = load_generic_recording(dir.path() / "s", rec.subject_id);
  EXPECT_EQ(back.channels, rec.channels);
  EXPECT_EQ(back.provenance, Provenance::GenericCsv);
}

TEST(Resample, LinearMidpoint) {
  const std::vector<double> v{0, 10};
  EXPECT_EQ(resample(v, 3), (std::vector<double>{0, 5, 10}));
}

TEST(Resample, ConstantStaysConstant) {
  const std::vector<double> v(7, 2.5);
  for (double x : resample(v, 31)) EXPECT_EQ(x, 2.5);
}

TEST(Resample, HandInterpolation) {
  const std::vector<double> v{0, 1, 2, 3};
  EXPECT_EQ(resample(v, 7), (std::vector<double>{0, 0.5, 1, 1.5, 2, 2.5, 3}));
}

TEST(Resample, IdempotentAtSourceLength) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(2 + rep);
    for (double& x : v) x = nd(rng);
    EXPECT_EQ(resample(v, v.size()), v);
  }
}

TEST(Resample, RejectsShortTargets) {
  const std::vector<double> v{1, 2, 3};
  EXPECT_THROW(resample(v, 1), ArgumentError);
  const std::vector<double> one{1};
  EXPECT_THROW(resample(one, 4), ArgumentError);
}

TEST(FillGaps, InterpolatesShortGapsOnly) {
  const std::vector<double> v{1, kMissing, 3, 4};
  EXPECT_EQ(*fill_gaps(v, 1.0, 5.0), (std::vector<double>{1, 2, 3, 4}));
  std::vector<double> long_gap(10, kMissing);
  long_gap[0] = 1;
  long_gap[9] = 2;
  EXPECT_FALSE(fill_gaps(long_gap, 1.0, 5.0).has_value());
  const std::vector<double> edge{kMissing, 2, 2};
  EXPECT_EQ(*fill_gaps(edge, 1.0, 5.0), (std::vector<double>{2, 2, 2}));
}

SensorRecording three_rate_recording() {
  SensorRecording rec;
  rec.subject_id = "u";
  for (auto k : {ChannelKind::AccX, ChannelKind::AccY, ChannelKind::AccZ}) {
    rec.channels[k] = Channel{k, 32.0, 100.0, std::vector<double>(320, 0.0)};
  }
  rec.channels[ChannelKind::Eda] = Channel{ChannelKind::Eda, 4.0, 100.0, std::vector<double>(40, 1.0)};
  std::vector<double> ppg(640);
  for (std::size_t i = 0; i < ppg.size(); ++i) ppg[i] = static_cast<double>(i);
  rec.channels[ChannelKind::Ppg] = Channel{ChannelKind::Ppg, 64.0, 100.0, ppg};
  for (std::size_t i = 0; i < 320; ++i) rec.channels[ChannelKind::AccX].values[i] = static_cast<double>(i);
  return rec;
}

TEST(SliceWindow, CrossRateCounts) {
  const auto rec = three_rate_recording();
  EXPECT_EQ(slice_window(rec, ChannelKind::Eda, 0, 80).size(), 10u);
  EXPECT_EQ(slice_window(rec, ChannelKind::Ppg, 0, 80).size(), 160u);
  const auto x = slice_window(rec, ChannelKind::AccX, 0, 80);
  ASSERT_EQ(x.size(), 80u);
  for (std::size_t i = 0; i < 80; ++i) EXPECT_EQ(x[i], static_cast<double>(i));
  const auto p = slice_window(rec, ChannelKind::Ppg, 32, 64);
  ASSERT_EQ(p.size(), 64u);
  EXPECT_EQ(p.front(), 64.0);
}

TEST(SliceWindow, Errors) {
  const auto rec = three_rate_recording();
  EXPECT_THROW(slice_window(rec, ChannelKind::Temp, 0, 80), MissingChannelError);
  EXPECT_THROW(slice_window(rec, ChannelKind::Eda, 80, 0), ArgumentError);
}

TEST(GroundTruth, JsonRoundTrip) {
  std::vector<RecordingTruth> truth{{"S01", "sess1", {{10, 74, GestureClass::CW, 1.0}, {200, 260, GestureClass::Pull, 1.0}}}};
  EXPECT_EQ(truth_from_json(truth_to_json(truth)), truth);
  EXPECT_EQ(truth_to_json(truth)[0]["windows"][0]["class"], "CW");
}

}  // namespace
}  // namespace pri::ingest
