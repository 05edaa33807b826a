#include <gtest/gtest.h>

#include <zlib.h>

#include <algorithm>
#include <random>

#include "pri/rpencode.hpp"
#include "test_util.hpp"

using namespace pri;
using namespace pri::rpencode;

namespace {

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

double channel_max(const AccImage& img, std::size_t c) {
  const auto ch = img.channel(c);
  return *std::max_element(ch.begin(), ch.end());
}

}  // namespace

TEST(RpChannel, HandExample) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m = rp_channel(x);
  EXPECT_EQ(m.data, (std::vector<double>{0, 1, 2, 3, 1, 0, 1, 2, 2, 1, 0, 1, 3, 2, 1, 0}));
}

TEST(RpChannel, ConstantIsZero) {
  const std::vector<double> x(10, 2.5);
  for (double v : rp_channel(x).data) EXPECT_EQ(v, 0.0);
}

TEST(RpChannel, TooShortThrows) {
  const std::vector<double> x{1.0};
  EXPECT_THROW(rp_channel(x), ArgumentError);
}

TEST(RpChannel, SymmetryScaleAndTimeReversal) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_signal(rng, 2 + rng() % 60);
    const std::size_t n = x.size();
    const auto m = rp_channel(x);
    std::vector<double> scaled(x), reversed(x.rbegin(), x.rend());
    for (double& v : scaled) v *= 4.0;  // power of two keeps the product exact
    const auto ms = rp_channel(scaled);
    const auto mr = rp_channel(reversed);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(m(i, i), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_EQ(m(i, j), m(j, i));
        ASSERT_EQ(ms(i, j), 4.0 * m(i, j));
        ASSERT_EQ(mr(i, j), m(n - 1 - i, n - 1 - j));
      }
    }
  }
}

TEST(Resize, IdentityAtSameSide) {
  std::mt19937_64 rng(1);
  const auto m = rp_channel(random_signal(rng, 12));
  EXPECT_EQ(resize_bilinear(m, 12), m);
}

TEST(Resize, CornersPreservedAndInterpolates) {
  Matrix m(2, 2);
  m(0, 0) = 0; m(0, 1) = 1; m(1, 0) = 2; m(1, 1) = 3;
  const auto r = resize_bilinear(m, 3);
  EXPECT_DOUBLE_EQ(r(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(r(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(r(2, 0), 2.0);
  EXPECT_DOUBLE_EQ(r(2, 2), 3.0);
  EXPECT_DOUBLE_EQ(r(1, 1), 1.5);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.5);
}

TEST(Encode, ConstantAxesGiveZeroImage) {
  const std::vector<double> c(80, 1.0);
  const auto img = encode_acc_image(c, c, c, 64);
  EXPECT_EQ(img.side, 64u);
  EXPECT_EQ(img.pixels.size(), 3u * 64 * 64);
  for (double v : img.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Encode, IdenticalAxesGiveGreyImage) {
  std::mt19937_64 rng(2);
  const auto x = random_signal(rng, 80);
  const auto img = encode_acc_image(x, x, x, 64);
  for (std::size_t k = 0; k < 64 * 64; ++k) {
    EXPECT_EQ(img.pixels[k], img.pixels[64 * 64 + k]);
    EXPECT_EQ(img.pixels[k], img.pixels[2 * 64 * 64 + k]);
  }
}

TEST(Encode, JointNormalizationHandExample) {
  const std::vector<double> x{0, 1}, y{0, 2}, z{0, 4};
  const auto img = encode_acc_image(x, y, z, 2);
  EXPECT_DOUBLE_EQ(channel_max(img, 0), 0.25);
  EXPECT_DOUBLE_EQ(channel_max(img, 1), 0.5);
  EXPECT_DOUBLE_EQ(channel_max(img, 2), 1.0);
}

TEST(Encode, InterAxisRatioPreservedAtNativeSide) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_signal(rng, 30), y = random_signal(rng, 30), z = random_signal(rng, 30);
    for (double& v : y) v *= 3.0;
    const auto img = encode_acc_image(x, y, z, 30);
    double mx = 0, mz = 0;
    for (double v : rp_channel(x).data) mx = std::max(mx, v);
    for (double v : rp_channel(z).data) mz = std::max(mz, v);
    EXPECT_NEAR(channel_max(img, 0) / channel_max(img, 2), mx / mz, 1e-6);
  }
}

TEST(Encode, RangeAndDeterminism) {
  std::mt19937_64 rng(4);
  const auto x = random_signal(rng, 80), y = random_signal(rng, 80), z = random_signal(rng, 80);
  const auto a = encode_acc_image(x, y, z, 64);
  const auto b = encode_acc_image(x, y, z, 64);
  EXPECT_EQ(a.pixels, b.pixels);
  for (double v : a.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GT(*std::max_element(a.pixels.begin(), a.pixels.end()), 0.5);
}

TEST(Encode, UnequalLengthsThrow) {
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  EXPECT_THROW(encode_acc_image(a, a, b), ArgumentError);
  const std::vector<double> one{1.0};
  EXPECT_THROW(encode_acc_image(one, one, one), ArgumentError);
}

TEST(Png, SignatureAndDecodableIdat) {
  const std::vector<double> x{0, 1, 0}, y{0, 0, 1}, z{1, 0, 0};
  const auto img = encode_acc_image(x, y, z, 4);
  pri::test::TempDir dir;
  const auto path = dir.path() / "img.png";
  write_png(img, path);
  const auto bytes = pri::test::read_text(path);
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  const auto idat = bytes.find("IDAT");
  ASSERT_NE(idat, std::string::npos);
  const auto len = (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[idat - 4])) << 24) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[idat - 3])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[idat - 2])) << 8) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[idat - 1]));
  std::vector<unsigned char> raw(4 * (1 + 4 * 3));
  uLongf raw_len = raw.size();
  ASSERT_EQ(uncompress(raw.data(), &raw_len, reinterpret_cast<const Bytef*>(bytes.data() + idat + 4), len), Z_OK);
  EXPECT_EQ(raw_len, raw.size());
  EXPECT_EQ(raw[0], 0);  // filter byte
  EXPECT_EQ(raw[1], 0);  // diagonal pixel, red
  // Pixel (0,3) samples RP cell (0,2): |x0-x2| = 0, |y0-y2| = 1, |z0-z2| = 1.
  EXPECT_EQ(raw[1 + 3 * 3 + 0], 0);
  EXPECT_EQ(raw[1 + 3 * 3 + 1], 255);
  EXPECT_EQ(raw[1 + 3 * 3 + 2], 255);
}
