#include <gtest/gtest.h>

#include <random>

#include "pri/rqa.hpp"

using namespace pri;
using namespace pri::rqa;

namespace {

BinaryMatrix from_rows(std::vector<std::vector<int>> rows) {
  BinaryMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = static_cast<std::uint8_t>(rows[i][j]);
  }
  return m;
}

// An off-diagonal recurrent point lies on a diagonal line of length >= 2 iff one of
// its diagonal neighbours is also recurrent.
RqaMeasures brute_force(const BinaryMatrix& r) {
  const auto n = static_cast<long>(r.n);
  auto at = [&](long i, long j) { return i >= 0 && j >= 0 && i < n && j < n && r(i, j); };
  long total = 0, on_line = 0;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      if (i == j || !r(i, j)) continue;
      ++total;
      if (at(i - 1, j - 1) || at(i + 1, j + 1)) ++on_line;
    }
  }
  RqaMeasures m;
  if (n >= 2) m.recurrence_rate = static_cast<double>(total) / static_cast<double>(n * (n - 1));
  m.determinism = total ? static_cast<double>(on_line) / static_cast<double>(total) : 0.0;
  return m;
}

}  // namespace

TEST(Embed, HandExample) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto t = embed_phase_space(x, 2, 1);
  ASSERT_EQ(t.rows, 3u);
  ASSERT_EQ(t.cols, 2u);
  EXPECT_EQ(t.data, (std::vector<double>{1, 2, 2, 3, 3, 4}));
}

TEST(Embed, DimensionOneIsIdentity) {
  const std::vector<double> x{5, -1, 2.5};
  const auto t = embed_phase_space(x, 1, 3);
  EXPECT_EQ(t.data, x);
}

TEST(Embed, RowCount) {
  const std::vector<double> x(80, 0.0);
  EXPECT_EQ(embed_phase_space(x, 3, 4).rows, 72u);
}

TEST(Embed, TooShortThrows) {
  const std::vector<double> x(8, 0.0);
  EXPECT_THROW(embed_phase_space(x, 3, 4), ArgumentError);
  EXPECT_THROW(embed_phase_space(x, 0, 1), ArgumentError);
}

TEST(Recurrence, ConstantSignalAllOnes) {
  const std::vector<double> x(20, 3.0);
  const auto r = recurrence_matrix(embed_phase_space(x, 3, 2), 0.1);
  for (auto v : r.cells) EXPECT_EQ(v, 1);
}

TEST(Recurrence, HandDistances) {
  Matrix t(2, 1);
  t(0, 0) = 0;
  t(1, 0) = 10;
  EXPECT_EQ(recurrence_matrix(t, 1.0), from_rows({{1, 0}, {0, 1}}));
  EXPECT_THROW(recurrence_matrix(t, 0.0), ArgumentError);
}

TEST(Recurrence, SymmetricUnitDiagonal) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 12, m = 1 + rng() % 3;
    Matrix t(n, m);
    for (double& v : t.data) v = g(rng);
    const auto r = recurrence_matrix(t, 0.2 + 0.1 * static_cast<double>(rng() % 20));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(r(i, i), 1);
      for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(r(i, j), r(j, i));
    }
  }
}

TEST(Measures, AllOnes) {
  BinaryMatrix r(4);
  std::fill(r.cells.begin(), r.cells.end(), 1);
  const auto m = rqa_measures(r);
  EXPECT_DOUBLE_EQ(m.recurrence_rate, 1.0);
  // Corners (0,3) and (3,0) are diagonals of length 1.
  EXPECT_DOUBLE_EQ(m.determinism, 10.0 / 12.0);
  EXPECT_DOUBLE_EQ(rqa_measures(r, 1).determinism, 1.0);
}

TEST(Measures, AllOnesLargeTendsToOne) {
  BinaryMatrix r(40);
  std::fill(r.cells.begin(), r.cells.end(), 1);
  EXPECT_NEAR(rqa_measures(r).determinism, 1.0 - 2.0 / (40.0 * 39.0), 1e-15);
}

TEST(Measures, Identity) {
  BinaryMatrix r(5);
  for (std::size_t i = 0; i < 5; ++i) r(i, i) = 1;
  const auto m = rqa_measures(r);
  EXPECT_EQ(m.recurrence_rate, 0.0);
  EXPECT_EQ(m.determinism, 0.0);
}

TEST(Measures, LengthTwoLinePlusIsolatedPair) {
  // Line (0,1),(1,2) and mirror: 4 points. Isolated (0,4) and mirror: 2 points.
  const auto r = from_rows({{1, 1, 0, 0, 1},
                            {1, 1, 1, 0, 0},
                            {0, 1, 1, 0, 0},
                            {0, 0, 0, 1, 0},
                            {1, 0, 0, 0, 1}});
  const auto m = rqa_measures(r);
  EXPECT_NEAR(m.determinism, 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(m.recurrence_rate, 6.0 / 20.0, 1e-15);
}

TEST(Measures, LengthThreeLinePlusTwoIsolatedPairs) {
  // Line (0,1),(1,2),(2,3) and mirror: 6 points. (0,4) and (1,4) plus mirrors have
  // no recurrent diagonal neighbour: 4 isolated points.
  const auto r = from_rows({{1, 1, 0, 0, 1},
                            {1, 1, 1, 0, 1},
                            {0, 1, 1, 1, 0},
                            {0, 0, 1, 1, 0},
                            {1, 1, 0, 0, 1}});
  const auto m = rqa_measures(r);
  EXPECT_NEAR(m.determinism, 6.0 / 10.0, 1e-15);
}

TEST(Measures, MatchesBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const double density = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
    BinaryMatrix r(n);
    std::bernoulli_distribution b(density);
    const bool symmetric = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      r(i, i) = 1;
      for (std::size_t j = symmetric ? i + 1 : 0; j < n; ++j) {
        if (i == j) continue;
        r(i, j) = b(rng);
        if (symmetric) r(j, i) = r(i, j);
      }
    }
    const auto got = rqa_measures(r);
    const auto want = brute_force(r);
    ASSERT_DOUBLE_EQ(got.recurrence_rate, want.recurrence_rate) << "trial " << trial;
    ASSERT_DOUBLE_EQ(got.determinism, want.determinism) << "trial " << trial;
  }
}

TEST(Measures, ExhaustiveFourByFourSymmetric) {
  // All 2^6 symmetric 4x4 matrices with unit diagonal.
  for (unsigned mask = 0; mask < 64; ++mask) {
    BinaryMatrix r(4);
    unsigned bit = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      r(i, i) = 1;
      for (std::size_t j = i + 1; j < 4; ++j, ++bit) {
        r(i, j) = r(j, i) = (mask >> bit) & 1u;
      }
    }
    const auto got = rqa_measures(r);
    const auto want = brute_force(r);
    EXPECT_DOUBLE_EQ(got.determinism, want.determinism);
    EXPECT_DOUBLE_EQ(got.recurrence_rate, want.recurrence_rate);
  }
}
