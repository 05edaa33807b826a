#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "pri/mmsnn.hpp"
#include "test_util.hpp"

using namespace pri;
using namespace pri::mmsnn;
using pri::test::random_input;
using pri::test::tiny_config;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Init, DeterministicGivenSeed) {
  const auto a = init_model(tiny_config(), 5);
  const auto b = init_model(tiny_config(), 5);
  const auto c = init_model(tiny_config(), 6);
  EXPECT_EQ(checkpoint_to_json(a), checkpoint_to_json(b));
  EXPECT_NE(checkpoint_to_json(a)["tensors"], checkpoint_to_json(c)["tensors"]);
}

TEST(Init, DefaultShapes) {
  ModelConfig c;
  c.num_identities = 5;
  const auto p = init_model(c, 1);
  EXPECT_EQ(c.embedding_dim(), 128u);
  EXPECT_EQ(p.w_id.shape, (std::vector<std::size_t>{5, 128}));
  EXPECT_EQ(p.conv.size(), 3u);
  EXPECT_EQ(p.conv[2].w.shape, (std::vector<std::size_t>{64, 32, 3, 3}));
  EXPECT_EQ(p.img_w.shape, (std::vector<std::size_t>{64, 64 * 8 * 8}));
  EXPECT_EQ(p.lstm.size(), 2u);
  EXPECT_EQ(p.lstm[0].wx.shape, (std::vector<std::size_t>{256, 1}));
  EXPECT_EQ(p.lstm[1].wx.shape, (std::vector<std::size_t>{256, 64}));
  for (std::size_t u = 64; u < 128; ++u) EXPECT_EQ(p.lstm[0].b[u], 1.0);
}

TEST(Init, InvalidConfigThrows) {
  auto c = tiny_config();
  c.num_identities = 1;
  EXPECT_THROW(init_model(c, 1), ConfigError);
  c = tiny_config();
  c.d_img = 0;
  EXPECT_THROW(init_model(c, 1), ConfigError);
  c = tiny_config();
  c.loss.lambda_id = 0.0;
  c.loss.lambda_ver = 0.0;
  EXPECT_THROW(init_model(c, 1), ConfigError);
  c = tiny_config();
  c.loss.margin = 0.0;
  EXPECT_THROW(init_model(c, 1), ConfigError);
}

TEST(Encode, DeterministicAndDimension) {
  std::mt19937_64 rng(1);
  const auto p = init_model(tiny_config(), 2);
  const auto in = random_input(p.config, rng);
  const auto a = encode(p, in);
  EXPECT_EQ(a.size(), 8u);
  EXPECT_EQ(a, encode(p, in));
}

TEST(Encode, BranchSeparation) {
  std::mt19937_64 rng(2);
  const auto p = init_model(tiny_config(), 3);
  const auto in = random_input(p.config, rng);
  auto other_image = in, other_physio = in;
  other_image.image = random_input(p.config, rng).image;
  other_physio.physio = random_input(p.config, rng).physio;
  const auto e = encode(p, in), ei = encode(p, other_image), ep = encode(p, other_physio);
  const std::size_t dp = p.config.d_phys;
  for (std::size_t k = 0; k < dp; ++k) EXPECT_EQ(e[k], ei[k]);
  for (std::size_t k = dp; k < e.size(); ++k) EXPECT_EQ(e[k], ep[k]);
  EXPECT_NE(e, ei);
  EXPECT_NE(e, ep);
}

TEST(Encode, DimensionMismatchThrows) {
  std::mt19937_64 rng(3);
  const auto p = init_model(tiny_config(), 3);
  auto in = random_input(p.config, rng);
  in.physio.pop_back();
  EXPECT_THROW(encode(p, in), ArgumentError);
  in = random_input(p.config, rng);
  in.image.side = 4;
  EXPECT_THROW(encode(p, in), ArgumentError);
}

TEST(Encode, ZeroInputBiasPathOracle) {
  // One conv layer and one LSTM layer; outputs computed here from the raw weights.
  ModelConfig c = tiny_config();
  c.conv_channels = {2};
  c.lstm_layers = 1;
  c.lstm_hidden = 2;
  auto p = init_model(c, 9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.5);
  for (double& v : p.conv[0].b.data) v = g(rng);
  for (double& v : p.lstm[0].b.data) v = g(rng);
  for (double& v : p.img_b.data) v = g(rng);
  for (double& v : p.phys_b.data) v = g(rng);

  ModalInput in;
  in.image.side = 8;
  in.image.pixels.assign(3 * 64, 0.0);
  in.physio.assign(8, 0.0);
  const auto eta = encode(p, in);

  // Image: every conv output is ReLU(bias), 2 channels x 4 x 4.
  std::vector<double> flat;
  for (std::size_t ch = 0; ch < 2; ++ch) flat.insert(flat.end(), 16, std::max(0.0, p.conv[0].b[ch]));
  for (std::size_t o = 0; o < 4; ++o) {
    double s = p.img_b[o];
    for (std::size_t k = 0; k < flat.size(); ++k) s += p.img_w[o * flat.size() + k] * flat[k];
    EXPECT_NEAR(eta[4 + o], s, 1e-14);
  }
  // LSTM with zero input: gates depend only on b and the recurrent state.
  const auto& L = p.lstm[0];
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double h[2] = {0, 0}, cc[2] = {0, 0};
  for (int t = 0; t < 8; ++t) {
    double a[8];
    for (int r = 0; r < 8; ++r) a[r] = L.b[r] + L.wh[r * 2] * h[0] + L.wh[r * 2 + 1] * h[1];
    for (int u = 0; u < 2; ++u) {
      cc[u] = sig(a[2 + u]) * cc[u] + sig(a[u]) * std::tanh(a[4 + u]);
      h[u] = sig(a[6 + u]) * std::tanh(cc[u]);
    }
  }
  for (std::size_t o = 0; o < 4; ++o) {
    const double s = p.phys_b[o] + p.phys_w[o * 2] * h[0] + p.phys_w[o * 2 + 1] * h[1];
    EXPECT_NEAR(eta[o], s, 1e-14);
  }
  for (double v : eta) EXPECT_TRUE(std::isfinite(v));
}

TEST(Contrastive, Examples) {
  const std::vector<double> a{0, 0}, b{3, 4}, c{1, 1};
  EXPECT_EQ(contrastive_loss(c, c, 1, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(a, b, 0, 5.0), 0.0);
  EXPECT_EQ(contrastive_loss(a, b, 0, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(a, b, 0, 6.0), 1.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(a, b, 1, 6.0), 25.0);
  const std::vector<double> shorter{1};
  EXPECT_THROW(contrastive_loss(a, shorter, 1, 1.0), ArgumentError);
}

TEST(Contrastive, NonnegativeAndZeroSet) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(3), b(3);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = trial % 5 == 0 ? a[&v - b.data()] : g(rng);
    const int y = trial % 2;
    const double m = 0.5 + std::abs(g(rng));
    const double l = contrastive_loss(a, b, y, m);
    const double d = euclidean(a, b);
    EXPECT_GE(l, 0.0);
    EXPECT_EQ(l == 0.0, (y == 1 && d == 0.0) || (y == 0 && d >= m));
  }
}

TEST(Softmax, Contract) {
  auto c = tiny_config();
  auto p = init_model(c, 1);
  std::fill(p.w_id.data.begin(), p.w_id.data.end(), 0.0);
  const std::vector<double> eta(8, 0.7);
  for (double v : identification_prob(p, eta)) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);

  c.num_identities = 2;
  auto q = init_model(c, 1);
  std::fill(q.w_id.data.begin(), q.w_id.data.end(), 0.0);
  q.w_id[0] = std::log(3.0);
  std::vector<double> e(8, 0.0);
  e[0] = 1.0;
  const auto pr = identification_prob(q, e);
  EXPECT_NEAR(pr[0], 0.75, 1e-12);
  EXPECT_NEAR(pr[1], 0.25, 1e-12);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = g(rng);
    const auto s = softmax(z);
    EXPECT_NEAR(sum(s), 1.0, 1e-9);
    auto shifted = z;
    const double shift = g(rng) * 50.0;
    for (double& v : shifted) v += shift;
    const auto t = softmax(shifted);
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(s[k], t[k], 1e-9);
  }
  EXPECT_THROW(identification_prob(p, std::vector<double>(5, 0.0)), ArgumentError);
}

TEST(JointLoss, ZeroForIdenticalSimilarWithoutIdTerm) {
  std::mt19937_64 rng(7);
  const auto p = init_model(tiny_config(), 1);
  const auto in = random_input(p.config, rng);
  const auto r = joint_loss(p, {&in, &in, 1, 0, 0}, {1.0, 0.0, 1.0});
  EXPECT_EQ(r.loss.total, 0.0);
}

TEST(JointLoss, VerificationOffEqualsHandCrossEntropy) {
  std::mt19937_64 rng(8);
  const auto p = init_model(tiny_config(), 2);
  const auto a = random_input(p.config, rng), b = random_input(p.config, rng);
  const auto r = joint_loss(p, {&a, &b, 0, 1, 2}, {0.0, 1.0, 1.0});
  auto ce = [&](const ModalInput& in, std::size_t id) {
    const auto eta = encode(p, in);
    double z[3] = {0, 0, 0};
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < 8; ++i) z[k] += p.w_id[k * 8 + i] * eta[i];
    }
    return -std::log(std::exp(z[id]) / (std::exp(z[0]) + std::exp(z[1]) + std::exp(z[2])));
  };
  EXPECT_NEAR(r.loss.total, ce(a, 1) + ce(b, 2), 1e-12);
}

TEST(JointLoss, UnknownIdentityThrows) {
  std::mt19937_64 rng(9);
  const auto p = init_model(tiny_config(), 2);
  const auto a = random_input(p.config, rng);
  EXPECT_THROW(joint_loss(p, {&a, &a, 1, 3, 3}, {}), ArgumentError);
}

TEST(JointLoss, SubNetworksShareOneParameterSet) {
  const auto p = init_model(tiny_config(), 2);
  const auto [a, b] = twin(p);
  EXPECT_EQ(&a.params, &b.params);
  EXPECT_EQ(&a.params, &p);
  EXPECT_EQ(&a.params.w_id, &b.params.w_id);
}

TEST(JointLoss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  auto p = init_model(tiny_config(), 11);
  pri::test::move_to_generic_point(p, 12);
  const auto a = random_input(p.config, rng), b = random_input(p.config, rng);
  // Similar pair, and a dissimilar pair with the hinge active.
  const double d = euclidean(encode(p, a), encode(p, b));
  for (const auto& [pair, w] : {std::pair<PairSample, LossWeights>{{&a, &b, 1, 0, 0}, {1.0, 1.0, 1.0}},
                                std::pair<PairSample, LossWeights>{{&a, &b, 0, 1, 2}, {0.7, 1.3, 2.0 * d}}}) {
    for (const auto& g : pri::test::check_gradients(p, pair, w)) {
      EXPECT_LT(g.relative_error, 1e-4) << g.name << " y=" << pair.y;
      EXPECT_GT(g.analytic_norm, 0.0) << g.name;
    }
  }
}

TEST(JointLoss, GradientsAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    std::mt19937_64 rng(seed);
    auto p = init_model(tiny_config(), seed);
    pri::test::move_to_generic_point(p, seed + 100);
    const auto a = random_input(p.config, rng), b = random_input(p.config, rng);
    const int y = static_cast<int>(seed % 2);
    const PairSample pair{&a, &b, y, 0, y ? 0u : 1u};
    for (const auto& g : pri::test::check_gradients(p, pair, {1.0, 0.7, 3.0})) {
      EXPECT_LT(g.relative_error, 1e-4) << g.name << " seed " << seed;
    }
  }
}

namespace {

/// Two identities whose physio levels differ; images random.
TrainingSet separable_set(const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  TrainingSet s;
  for (std::size_t i = 0; i < 12; ++i) {
    auto in = random_input(c, rng);
    const std::size_t id = i % 2;
    for (double& v : in.physio) v = (id == 0 ? -1.0 : 1.0) + g(rng);
    s.inputs.push_back(in);
    s.identities.push_back(id);
  }
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = i + 1; j < 12; ++j) s.pairs.push_back({i, j, s.identities[i] == s.identities[j] ? 1 : 0});
  }
  return s;
}

}  // namespace

TEST(Train, LossDecreases) {
  auto c = tiny_config();
  c.num_identities = 2;
  const auto data = separable_set(c, 1);
  Hyper h;
  h.epochs = 50;
  h.lr = 0.05;
  h.batch = 16;
  h.momentum = 0.5;
  const auto r = train(init_model(c, 3), data, h);
  ASSERT_EQ(r.history.size(), 50u);
  EXPECT_LT(r.history.back(), r.history.front());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    correct += predict_identity(r.params, data.inputs[i]).identity == data.identities[i];
  }
  EXPECT_EQ(correct, data.inputs.size());
}

TEST(Train, DeterministicAndOrderIndependent) {
  auto c = tiny_config();
  c.num_identities = 2;
  auto data = separable_set(c, 2);
  Hyper h;
  h.epochs = 5;
  h.lr = 0.02;
  h.batch = 7;
  h.clip_norm = 5.0;
  const auto a = train(init_model(c, 3), data, h);
  const auto b = train(init_model(c, 3), data, h);
  EXPECT_EQ(a.history, b.history);
  std::reverse(data.pairs.begin(), data.pairs.end());
  const auto r = train(init_model(c, 3), data, h);
  EXPECT_EQ(a.history, r.history);
  EXPECT_EQ(checkpoint_to_json(a.params), checkpoint_to_json(r.params));
}

TEST(Train, BatchGradientEqualsSumOfPairGradients) {
  auto c = tiny_config();
  c.num_identities = 2;
  const auto data = separable_set(c, 3);
  const auto p = init_model(c, 4);
  std::vector<PairRef> batch{{0, 1, 0}, {0, 2, 1}, {3, 3, 1}, {1, 5, 1}};
  auto g = p.zeros_like();
  batch_gradient(p, data, batch, g);
  auto expect = p.zeros_like();
  std::vector<Tensor*> et;
  expect.for_each_tensor([&](Tensor& t) { et.push_back(&t); });
  for (const auto& pr : batch) {
    const auto r = joint_loss(p, {&data.inputs[pr.a], &data.inputs[pr.b], pr.y, data.identities[pr.a],
                                  data.identities[pr.b]}, c.loss);
    std::size_t k = 0;
    r.grads.for_each_tensor([&](const Tensor& t) {
      for (std::size_t i = 0; i < t.size(); ++i) (*et[k])[i] += t[i] / 4.0;
      ++k;
    });
  }
  std::vector<const Tensor*> gt;
  g.for_each_tensor([&](const Tensor& t) { gt.push_back(&t); });
  for (std::size_t k = 0; k < gt.size(); ++k) {
    for (std::size_t i = 0; i < gt[k]->size(); ++i) EXPECT_NEAR((*gt[k])[i], (*et[k])[i], 1e-12);
  }
}

TEST(Train, Errors) {
  auto c = tiny_config();
  c.num_identities = 2;
  auto data = separable_set(c, 4);
  const auto p = init_model(c, 1);
  auto empty = data;
  empty.pairs.clear();
  EXPECT_THROW(train(p, empty, {}), ArgumentError);
  auto only_similar = data;
  std::erase_if(only_similar.pairs, [](const PairRef& r) { return r.y == 0; });
  EXPECT_THROW(train(p, only_similar, {}), ArgumentError);
  auto unknown = data;
  unknown.identities[0] = 2;
  EXPECT_THROW(train(p, unknown, {}), ArgumentError);
  Hyper bad;
  bad.lr = 0.0;
  EXPECT_THROW(train(p, data, bad), ConfigError);
}

TEST(Predict, DominantRowAndTies) {
  std::mt19937_64 rng(11);
  auto p = init_model(tiny_config(), 1);
  const auto in = random_input(p.config, rng);
  std::fill(p.w_id.data.begin(), p.w_id.data.end(), 0.0);
  auto r = predict_identity(p, in);
  EXPECT_EQ(r.identity, 0u);  // all tied
  EXPECT_NEAR(sum(r.probabilities), 1.0, 1e-12);
  const auto eta = encode(p, in);
  for (std::size_t i = 0; i < 8; ++i) p.w_id[2 * 8 + i] = eta[i];
  r = predict_identity(p, in);
  EXPECT_EQ(r.identity, 2u);
  EXPECT_NEAR(sum(r.probabilities), 1.0, 1e-12);
}

TEST(Verify, DistanceAndThreshold) {
  std::mt19937_64 rng(12);
  const auto p = init_model(tiny_config(), 1);
  const auto a = random_input(p.config, rng), b = random_input(p.config, rng);
  const auto same = verify_pair(p, a, a, 1e-9);
  EXPECT_EQ(same.distance, 0.0);
  EXPECT_TRUE(same.similar);
  const auto diff = verify_pair(p, a, b, 0.0);
  EXPECT_GT(diff.distance, 0.0);
  EXPECT_FALSE(diff.similar);
}

TEST(Checkpoint, RoundTripIsExact) {
  std::mt19937_64 rng(13);
  auto p = init_model(tiny_config(), 21);
  p.physio_mean = 71.25;
  p.physio_sd = 3.5;
  p.identity_names = {"S01", "S02", "S03"};
  for (double& v : p.img_w.data) v *= 1.0 / 3.0;
  pri::test::TempDir dir;
  save_checkpoint(p, dir.path() / "m.json");
  const auto q = load_checkpoint(dir.path() / "m.json");
  EXPECT_EQ(q.config, p.config);
  EXPECT_EQ(q.identity_names, p.identity_names);
  EXPECT_EQ(q.physio_mean, p.physio_mean);
  std::vector<const Tensor*> pt, qt;
  p.for_each_tensor([&](const Tensor& t) { pt.push_back(&t); });
  q.for_each_tensor([&](const Tensor& t) { qt.push_back(&t); });
  ASSERT_EQ(pt.size(), qt.size());
  for (std::size_t k = 0; k < pt.size(); ++k) EXPECT_EQ(*pt[k], *qt[k]);
  const auto in = random_input(p.config, rng);
  EXPECT_EQ(encode(p, in), encode(q, in));
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const auto p = init_model(tiny_config(), 1);
  auto j = checkpoint_to_json(p);
  j["tensors"][0]["data"].erase(0);
  EXPECT_THROW(checkpoint_from_json(j), FormatError);
  j = checkpoint_to_json(p);
  j["format"] = "other";
  EXPECT_THROW(checkpoint_from_json(j), FormatError);
  EXPECT_THROW(checkpoint_from_json(nlohmann::json::object()), FormatError);
}
