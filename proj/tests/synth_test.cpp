#include "pri/synth.hpp"

#include <gtest/gtest.h>

namespace pri::synth {
namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.n_subjects = 5;
  c.n_sessions = 1;
  c.gestures_per_session = 20;
  c.seed = 11;
  return c;
}

TEST(Synth, RejectsSingleSubject) {
  auto c = small_config();
  c.n_subjects = 1;
  EXPECT_THROW(synth_generate(c), ConfigError);
  c.n_subjects = 3;
  c.identity_separation = 1.5;
  EXPECT_THROW(synth_generate(c), ConfigError);
}

TEST(Synth, CountsMatchConfig) {
  const auto data = synth_generate(small_config());
  ASSERT_EQ(data.recordings.size(), 5u);
  ASSERT_EQ(data.truth.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(data.truth[i].windows.size(), 20u);
    EXPECT_EQ(data.truth[i].subject_id, data.recordings[i].subject_id);
    data.recordings[i].validate();
  }
}

TEST(Synth, SameSeedIsBitIdentical) {
  const auto a = synth_generate(small_config());
  const auto b = synth_generate(small_config());
  EXPECT_EQ(a.recordings, b.recordings);
  EXPECT_EQ(a.truth, b.truth);
  auto c = small_config();
  c.seed = 12;
  EXPECT_NE(synth_generate(c).recordings, a.recordings);
}

TEST(Synth, WindowsAreOrderedAndShort) {
  const auto data = synth_generate(small_config());
  for (std::size_t r = 0; r < data.recordings.size(); ++r) {
    const auto& w = data.truth[r].windows;
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_GT(w[i].end, w[i].start);
      EXPECT_LE(w[i].length(), static_cast<std::size_t>(4 * kAccRate));
      EXPECT_LE(w[i].end, data.recordings[r].acc_length());
      if (i) {
        EXPECT_GT(w[i].start, w[i - 1].end);
      }
    }
  }
}

TEST(Synth, ZeroSeparationMakesSubjectsIdentical) {
  auto c = small_config();
  c.identity_separation = 0.0;
  const auto p = make_subject_profiles(c);
  for (std::size_t s = 1; s < p.size(); ++s) {
    EXPECT_EQ(p[s].hr_base, p[0].hr_base);
    EXPECT_EQ(p[s].br_base, p[0].br_base);
    EXPECT_EQ(p[s].eda_tonic, p[0].eda_tonic);
    EXPECT_EQ(p[s].temp_base, p[0].temp_base);
    EXPECT_EQ(p[s].hr_offset, p[0].hr_offset);
    EXPECT_EQ(p[s].br_offset, p[0].br_offset);
    EXPECT_EQ(p[s].scr_amplitude, p[0].scr_amplitude);
  }
}

TEST(Synth, FullSeparationSeparatesGestureLockedMeans) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    auto c = small_config();
    c.identity_separation = 1.0;
    c.seed = seed;
    const auto p = make_subject_profiles(c);
    const double required = 3.0 * hr_noise_sd(c);
    for (auto g : kAllGestures) {
      for (std::size_t a = 0; a < p.size(); ++a) {
        for (std::size_t b = a + 1; b < p.size(); ++b) {
          EXPECT_GE(std::abs(p[a].gesture_locked_hr(g) - p[b].gesture_locked_hr(g)), required)
              << "seed " << seed << " gesture " << to_string(g);
        }
      }
    }
  }
}

TEST(Synth, BaselinesStayInDocumentedRanges) {
  auto c = small_config();
  c.n_subjects = 12;
  c.identity_separation = 1.0;
  for (const auto& p : make_subject_profiles(c)) {
    EXPECT_GE(p.hr_base, kHrLow);
    EXPECT_LE(p.hr_base, kHrHigh);
    EXPECT_GE(p.br_base, kBrLow);
    EXPECT_LE(p.br_base, kBrHigh);
    for (double o : p.hr_offset) EXPECT_LE(std::abs(o), kHrOffsetMax);
  }
}

}  // namespace
}  // namespace pri::synth
