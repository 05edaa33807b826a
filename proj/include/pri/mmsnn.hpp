#pragma once

// Multi-modal Siamese network. Each sub-network encodes a (physiology segment,
// ACC image) input into eta = [phi(physio) || alpha(image)]; both sub-networks
// share one parameter set. Training minimizes
//   lambda_ver * contrastive(eta_a, eta_b, y) + lambda_id * (CE(a) + CE(b)),
// with CE over softmax(W eta).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pri/error.hpp"
#include "pri/gesture_types.hpp"
#include "pri/ingest.hpp"
#include "pri/nn/conv2d.hpp"
#include "pri/nn/linear.hpp"
#include "pri/nn/lstm.hpp"
#include "pri/nn/tensor.hpp"
#include "pri/rng.hpp"
#include "pri/rpencode.hpp"

namespace pri::mmsnn {

using nn::Tensor;

struct LossWeights {
  double lambda_ver = 1.0;
  double lambda_id = 1.0;
  double margin = 1.0;

  void validate() const {
    if (!(lambda_ver >= 0.0) || !(lambda_id >= 0.0)) throw ConfigError("loss weights must be nonnegative");
    if (lambda_ver == 0.0 && lambda_id == 0.0) throw ConfigError("lambda_ver and lambda_id must not both be zero");
    if (!(margin > 0.0)) throw ConfigError("contrastive margin must be positive");
  }
};

struct ModelConfig {
  std::size_t num_identities = 2;
  std::size_t physio_len = 128;
  std::size_t image_side = 64;
  std::vector<std::size_t> conv_channels{16, 32, 64};
  std::size_t lstm_layers = 2;
  std::size_t lstm_hidden = 64;
  std::size_t d_img = 64;
  std::size_t d_phys = 64;
  LossWeights loss;

  std::size_t embedding_dim() const { return d_phys + d_img; }

  /// Spatial side after the stride-2 convolutions.
  std::size_t feature_side() const {
    std::size_t s = image_side;
    for (std::size_t i = 0; i < conv_channels.size(); ++i) s = (s + 2 - 3) / 2 + 1;
    return s;
  }

  void validate() const {
    if (num_identities < 2) throw ConfigError("model: num_identities must be >= 2");
    if (physio_len == 0) throw ConfigError("model: physio_len must be positive");
    if (image_side < 2) throw ConfigError("model: image_side must be >= 2");
    if (conv_channels.empty()) throw ConfigError("model: conv_channels must not be empty");
    for (auto c : conv_channels) {
      if (c == 0) throw ConfigError("model: conv channel counts must be positive");
    }
    if (lstm_layers == 0 || lstm_hidden == 0) throw ConfigError("model: LSTM layers and hidden size must be positive");
    if (d_img == 0 || d_phys == 0) throw ConfigError("model: d_img and d_phys must be positive");
    loss.validate();
  }

  bool operator==(const ModelConfig& o) const {
    return num_identities == o.num_identities && physio_len == o.physio_len && image_side == o.image_side &&
           conv_channels == o.conv_channels && lstm_layers == o.lstm_layers && lstm_hidden == o.lstm_hidden &&
           d_img == o.d_img && d_phys == o.d_phys && loss.lambda_ver == o.loss.lambda_ver &&
           loss.lambda_id == o.loss.lambda_id && loss.margin == o.loss.margin;
  }
};

struct ConvLayer {
  nn::ConvShape shape;
  Tensor w, b;
};

struct LstmLayer {
  Tensor wx, wh, b;
};

/// A gesture window as network input. physio is already normalized.
struct ModalInput {
  rpencode::AccImage image;
  std::vector<double> physio;
};

struct ModelParams {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::vector<ConvLayer> conv;
  Tensor img_w, img_b;
  std::vector<LstmLayer> lstm;
  Tensor phys_w, phys_b;
  Tensor w_id;  // (num_identities, d_phys + d_img), no bias
  // Metadata carried in checkpoints.
  double physio_mean = 0.0;
  double physio_sd = 1.0;
  std::vector<std::string> identity_names;

  template <typename F>
  void for_each_tensor(F&& f) {
    for (auto& l : conv) { f(l.w); f(l.b); }
    f(img_w); f(img_b);
    for (auto& l : lstm) { f(l.wx); f(l.wh); f(l.b); }
    f(phys_w); f(phys_b);
    f(w_id);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor([&](Tensor& t) { f(static_cast<const Tensor&>(t)); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const Tensor& t) { n += t.size(); });
    return n;
  }

  /// Same shapes and names, all zeros (used as a gradient accumulator).
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.for_each_tensor([](Tensor& t) { std::fill(t.data.begin(), t.data.end(), 0.0); });
    return z;
  }
};

inline ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.seed = seed;
  Rng rng(derive_seed(seed, 0x3e11));
  std::size_t in_c = 3, side = config.image_side;
  for (std::size_t l = 0; l < config.conv_channels.size(); ++l) {
    ConvLayer layer;
    layer.shape = {in_c, config.conv_channels[l], 3, 2, 1, side, side};
    const std::string n = "conv" + std::to_string(l);
    layer.w = Tensor(n + ".w", {layer.shape.out_c, in_c, 3, 3});
    layer.b = Tensor(n + ".b", {layer.shape.out_c});
    nn::fill_uniform(layer.w, rng, std::sqrt(6.0 / static_cast<double>(in_c * 9)));
    side = layer.shape.out_h();
    in_c = layer.shape.out_c;
    p.conv.push_back(std::move(layer));
  }
  const std::size_t flat = in_c * side * side;
  p.img_w = Tensor("img.w", {config.d_img, flat});
  p.img_b = Tensor("img.b", {config.d_img});
  nn::fill_uniform(p.img_w, rng, std::sqrt(6.0 / static_cast<double>(flat + config.d_img)));

  const std::size_t hd = config.lstm_hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hd));
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    const std::size_t in = l == 0 ? 1 : hd;
    const std::string n = "lstm" + std::to_string(l);
    LstmLayer layer{Tensor(n + ".wx", {4 * hd, in}), Tensor(n + ".wh", {4 * hd, hd}), Tensor(n + ".b", {4 * hd})};
    nn::fill_uniform(layer.wx, rng, bound);
    nn::fill_uniform(layer.wh, rng, bound);
    for (std::size_t u = hd; u < 2 * hd; ++u) layer.b[u] = 1.0;  // forget gate
    p.lstm.push_back(std::move(layer));
  }
  p.phys_w = Tensor("phys.w", {config.d_phys, hd});
  p.phys_b = Tensor("phys.b", {config.d_phys});
  nn::fill_uniform(p.phys_w, rng, std::sqrt(6.0 / static_cast<double>(hd + config.d_phys)));

  const std::size_t d = config.embedding_dim();
  p.w_id = Tensor("id.w", {config.num_identities, d});
  nn::fill_uniform(p.w_id, rng, std::sqrt(6.0 / static_cast<double>(d + config.num_identities)));
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct EncodeCache {
  std::vector<std::vector<double>> acts;  // acts[0] = image, acts[l+1] = ReLU(conv_l)
  std::vector<nn::LstmCache> lstm;
  std::vector<double> eta;
};

inline void check_input(const ModelConfig& c, const ModalInput& in) {
  if (in.physio.size() != c.physio_len) {
    throw ArgumentError("physio segment has length " + std::to_string(in.physio.size()) + ", model expects " +
                        std::to_string(c.physio_len));
  }
  if (in.image.side != c.image_side || in.image.pixels.size() != 3 * c.image_side * c.image_side) {
    throw ArgumentError("image side " + std::to_string(in.image.side) + " does not match model side " +
                        std::to_string(c.image_side));
  }
}

inline EncodeCache encode_cached(const ModelParams& p, const ModalInput& in) {
  check_input(p.config, in);
  EncodeCache k;
  // Physiological branch.
  std::span<const double> seq = in.physio;
  for (std::size_t l = 0; l < p.lstm.size(); ++l) {
    const auto& L = p.lstm[l];
    if (l == 0) {
      k.lstm.push_back(nn::lstm_forward({L.wx, L.wh, L.b}, seq, p.config.physio_len));
    } else {
      const auto& prev = k.lstm.back();
      k.lstm.push_back(nn::lstm_forward(
          {L.wx, L.wh, L.b}, std::span<const double>(prev.h.data() + prev.hidden, prev.steps * prev.hidden),
          p.config.physio_len));
    }
  }
  const auto& top = k.lstm.back();
  const auto phi = nn::linear_forward(p.phys_w, &p.phys_b, top.h_at(top.steps - 1));

  // Image branch.
  k.acts.push_back(in.image.pixels);
  for (const auto& layer : p.conv) {
    auto z = nn::conv2d_forward(layer.w, layer.b, k.acts.back(), layer.shape);
    for (double& v : z) v = v > 0.0 ? v : 0.0;
    k.acts.push_back(std::move(z));
  }
  const auto alpha = nn::linear_forward(p.img_w, &p.img_b, k.acts.back());

  k.eta = phi;
  k.eta.insert(k.eta.end(), alpha.begin(), alpha.end());
  return k;
}

/// eta = [phi(physio) || alpha(image)].
inline std::vector<double> encode(const ModelParams& p, const ModalInput& in) { return encode_cached(p, in).eta; }

/// Accumulates parameter gradients for d(loss)/d(eta) into g.
inline void encode_backward(const ModelParams& p, const EncodeCache& k, std::span<const double> deta, ModelParams& g) {
  const std::size_t dp = p.config.d_phys;
  // Image branch.
  auto d = nn::linear_backward(p.img_w, k.acts.back(), deta.subspan(dp), g.img_w, &g.img_b);
  for (std::size_t l = p.conv.size(); l-- > 0;) {
    const auto& out = k.acts[l + 1];
    for (std::size_t t = 0; t < d.size(); ++t) {
      if (out[t] <= 0.0) d[t] = 0.0;
    }
    d = nn::conv2d_backward(p.conv[l].w, k.acts[l], d, p.conv[l].shape, g.conv[l].w, g.conv[l].b, l > 0);
  }
  // Physiological branch.
  const auto& top = k.lstm.back();
  const auto dh_last = nn::linear_backward(p.phys_w, top.h_at(top.steps - 1), deta.subspan(0, dp), g.phys_w, &g.phys_b);
  std::vector<double> dh(top.steps * top.hidden, 0.0);
  std::copy(dh_last.begin(), dh_last.end(), dh.end() - static_cast<std::ptrdiff_t>(top.hidden));
  for (std::size_t l = p.lstm.size(); l-- > 0;) {
    const auto& L = p.lstm[l];
    auto& G = g.lstm[l];
    dh = nn::lstm_backward({L.wx, L.wh, L.b}, k.lstm[l], dh, {G.wx, G.wh, G.b}, l > 0);
  }
}

// ---------------------------------------------------------------------------
// Losses

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// y * D^2 + (1 - y) * max(0, margin - D)^2, D = |eta1 - eta2|.
inline double contrastive_loss(std::span<const double> eta1, std::span<const double> eta2, int y, double margin) {
  if (eta1.size() != eta2.size()) throw ArgumentError("contrastive_loss: dimension mismatch");
  const double d = euclidean(eta1, eta2);
  if (y == 1) return d * d;
  const double h = std::max(0.0, margin - d);
  return h * h;
}

/// Gradient of contrastive_loss w.r.t. eta1 (the gradient w.r.t. eta2 is its negation).
inline std::vector<double> contrastive_grad(std::span<const double> eta1, std::span<const double> eta2, int y,
                                            double margin) {
  std::vector<double> g(eta1.size(), 0.0);
  const double d = euclidean(eta1, eta2);
  double scale = 0.0;
  if (y == 1) {
    scale = 2.0;
  } else if (d < margin && d > 1e-12) {
    scale = -2.0 * (margin - d) / d;
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (eta1[i] - eta2[i]);
  return g;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (p.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    s += p[k];
  }
  for (double& v : p) v /= s;
  return p;
}

inline std::vector<double> identity_logits(const ModelParams& p, std::span<const double> eta) {
  if (eta.size() != p.w_id.shape[1]) throw ArgumentError("identification: eta dimension does not match W");
  return nn::linear_forward(p.w_id, nullptr, eta);
}

/// P(q = c | eta) = exp(W_c eta) / sum_k exp(W_k eta).
inline std::vector<double> identification_prob(const ModelParams& p, std::span<const double> eta) {
  return softmax(identity_logits(p, eta));
}

/// -log P(identity | eta) and its gradients w.r.t. eta and W (accumulated into gw, scaled by weight).
inline double cross_entropy(const ModelParams& p, std::span<const double> eta, std::size_t identity, double weight,
                            std::vector<double>& deta, Tensor* gw) {
  const auto logits = identity_logits(p, eta);
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  const double loss = -(logits[identity] - m - std::log(s));
  if (weight != 0.0) {
    const auto prob = softmax(logits);
    std::vector<double> dz(prob);
    dz[identity] -= 1.0;
    for (double& v : dz) v *= weight;
    Tensor scratch;
    if (!gw) {
      scratch = Tensor("", p.w_id.shape);
      gw = &scratch;
    }
    const auto de = nn::linear_backward(p.w_id, eta, dz, *gw, nullptr);
    for (std::size_t i = 0; i < deta.size(); ++i) deta[i] += de[i];
  }
  return loss;
}

/// Two views onto one parameter set.
struct SubNetwork {
  const ModelParams& params;
  EncodeCache encode(const ModalInput& in) const { return encode_cached(params, in); }
};

inline std::pair<SubNetwork, SubNetwork> twin(const ModelParams& p) { return {SubNetwork{p}, SubNetwork{p}}; }

struct PairSample {
  const ModalInput* a = nullptr;
  const ModalInput* b = nullptr;
  int y = 0;
  std::size_t id_a = 0, id_b = 0;
};

struct LossTerms {
  double total = 0.0, contrastive = 0.0, ce_a = 0.0, ce_b = 0.0;
};

struct JointLossResult {
  LossTerms loss;
  ModelParams grads;
};

inline void check_identity(const ModelParams& p, std::size_t id) {
  if (id >= p.config.num_identities) {
    throw ArgumentError("identity label " + std::to_string(id) + " is not enrolled (" +
                        std::to_string(p.config.num_identities) + " identities)");
  }
}

namespace detail {

/// Loss of one pair given both embeddings; accumulates d/d(eta) and dW.
inline LossTerms pair_loss(const ModelParams& p, std::span<const double> ea, std::span<const double> eb, int y,
                           std::size_t id_a, std::size_t id_b, const LossWeights& w, double scale,
                           std::vector<double>& dea, std::vector<double>& deb, Tensor* gw) {
  LossTerms t;
  t.contrastive = contrastive_loss(ea, eb, y, w.margin);
  if (w.lambda_ver != 0.0) {
    const auto g = contrastive_grad(ea, eb, y, w.margin);
    for (std::size_t i = 0; i < g.size(); ++i) {
      dea[i] += scale * w.lambda_ver * g[i];
      deb[i] -= scale * w.lambda_ver * g[i];
    }
  }
  const double wid = scale * w.lambda_id;
  t.ce_a = cross_entropy(p, ea, id_a, wid, dea, gw);
  t.ce_b = cross_entropy(p, eb, id_b, wid, deb, gw);
  t.total = w.lambda_ver * t.contrastive + w.lambda_id * (t.ce_a + t.ce_b);
  return t;
}

}  // namespace detail

/// Loss and full parameter gradient for one pair. Both branches read `p`.
inline JointLossResult joint_loss(const ModelParams& p, const PairSample& pair, const LossWeights& w) {
  w.validate();
  check_identity(p, pair.id_a);
  check_identity(p, pair.id_b);
  const auto [net_a, net_b] = twin(p);
  const auto ca = net_a.encode(*pair.a);
  const auto cb = net_b.encode(*pair.b);
  JointLossResult r{{}, p.zeros_like()};
  std::vector<double> dea(ca.eta.size(), 0.0), deb(cb.eta.size(), 0.0);
  r.loss = detail::pair_loss(p, ca.eta, cb.eta, pair.y, pair.id_a, pair.id_b, w, 1.0, dea, deb, &r.grads.w_id);
  encode_backward(p, ca, dea, r.grads);
  encode_backward(p, cb, deb, r.grads);
  return r;
}

// ---------------------------------------------------------------------------
// Training

/// Pair of pool indices.
struct PairRef {
  std::size_t a = 0, b = 0;
  int y = 0;
  auto operator<=>(const PairRef&) const = default;
};

struct TrainingSet {
  std::vector<ModalInput> inputs;
  std::vector<std::size_t> identities;  // per input
  std::vector<PairRef> pairs;
};

struct Hyper {
  std::size_t epochs = 50;
  double lr = 1e-3;
  std::size_t batch = 32;
  double momentum = 0.0;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs == 0) throw ConfigError("train: epochs must be positive");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (batch == 0) throw ConfigError("train: batch must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0,1)");
    if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be nonnegative");
  }
};

struct TrainResult {
  ModelParams params;
  std::vector<double> history;  // mean pair loss per epoch
};

/// Sum of pair losses over `batch` and the gradient of their mean; each distinct input is
/// encoded and back-propagated once.
inline double batch_gradient(const ModelParams& p, const TrainingSet& data, std::span<const PairRef> batch,
                             ModelParams& g) {
  const auto& w = p.config.loss;
  std::map<std::size_t, std::size_t> slot;
  std::vector<EncodeCache> caches;
  for (const auto& pr : batch) {
    for (std::size_t idx : {pr.a, pr.b}) {
      if (slot.emplace(idx, caches.size()).second) caches.push_back(encode_cached(p, data.inputs[idx]));
    }
  }
  std::vector<std::vector<double>> deta(caches.size(), std::vector<double>(p.config.embedding_dim(), 0.0));
  const double scale = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  for (const auto& pr : batch) {
    const std::size_t sa = slot[pr.a], sb = slot[pr.b];
    if (sa == sb) {
      std::vector<double> da(deta[sa].size(), 0.0), db(da.size(), 0.0);
      sum += detail::pair_loss(p, caches[sa].eta, caches[sb].eta, pr.y, data.identities[pr.a], data.identities[pr.b], w,
                               scale, da, db, &g.w_id).total;
      for (std::size_t i = 0; i < da.size(); ++i) deta[sa][i] += da[i] + db[i];
    } else {
      sum += detail::pair_loss(p, caches[sa].eta, caches[sb].eta, pr.y, data.identities[pr.a], data.identities[pr.b], w,
                               scale, deta[sa], deta[sb], &g.w_id).total;
    }
  }
  for (std::size_t s = 0; s < caches.size(); ++s) encode_backward(p, caches[s], deta[s], g);
  return sum;
}

inline TrainResult train(ModelParams params, const TrainingSet& data, const Hyper& hyper) {
  hyper.validate();
  params.config.loss.validate();
  if (data.pairs.empty()) throw ArgumentError("train: empty pair set");
  if (data.identities.size() != data.inputs.size()) throw ArgumentError("train: one identity per input required");
  bool has_similar = false, has_dissimilar = false;
  for (const auto& pr : data.pairs) {
    if (pr.a >= data.inputs.size() || pr.b >= data.inputs.size()) throw ArgumentError("train: pair index out of range");
    (pr.y == 1 ? has_similar : has_dissimilar) = true;
  }
  if (!has_similar || !has_dissimilar) throw ArgumentError("train: need at least one similar and one dissimilar pair");
  for (std::size_t id : data.identities) check_identity(params, id);
  for (const auto& in : data.inputs) check_input(params.config, in);

  std::vector<PairRef> order = data.pairs;
  std::sort(order.begin(), order.end());
  Rng rng(derive_seed(hyper.seed, 0x7a11));
  ModelParams velocity = params.zeros_like();
  TrainResult result;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t len = std::min(hyper.batch, order.size() - start);
      ModelParams g = params.zeros_like();
      epoch_sum += batch_gradient(params, data, std::span<const PairRef>(order).subspan(start, len), g);
      double scale = 1.0;
      if (hyper.clip_norm > 0.0) {
        double norm2 = 0.0;
        g.for_each_tensor([&](const Tensor& t) {
          for (double v : t.data) norm2 += v * v;
        });
        const double norm = std::sqrt(norm2);
        if (norm > hyper.clip_norm) scale = hyper.clip_norm / norm;
      }
      // Tensors are visited in the same order for params, grads and velocity.
      std::vector<Tensor*> pt, gt, vt;
      params.for_each_tensor([&](Tensor& t) { pt.push_back(&t); });
      g.for_each_tensor([&](Tensor& t) { gt.push_back(&t); });
      velocity.for_each_tensor([&](Tensor& t) { vt.push_back(&t); });
      for (std::size_t k = 0; k < pt.size(); ++k) {
        auto& pv = pt[k]->data;
        const auto& gv = gt[k]->data;
        auto& vv = vt[k]->data;
        for (std::size_t i = 0; i < pv.size(); ++i) {
          vv[i] = hyper.momentum * vv[i] + scale * gv[i];
          pv[i] -= hyper.lr * vv[i];
        }
      }
    }
    result.history.push_back(epoch_sum / static_cast<double>(order.size()));
  }
  result.params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------
// Inference

struct IdentityPrediction {
  std::size_t identity = 0;
  std::vector<double> probabilities;
};

/// Argmax of identification_prob; ties go to the lowest index.
inline IdentityPrediction predict_identity(const ModelParams& p, const ModalInput& in) {
  IdentityPrediction r;
  r.probabilities = identification_prob(p, encode(p, in));
  for (std::size_t k = 1; k < r.probabilities.size(); ++k) {
    if (r.probabilities[k] > r.probabilities[r.identity]) r.identity = k;
  }
  return r;
}

struct Verification {
  bool similar = false;
  double distance = 0.0;
};

inline Verification verify_pair(const ModelParams& p, const ModalInput& a, const ModalInput& b, double threshold) {
  const double d = euclidean(encode(p, a), encode(p, b));
  return {d <= threshold, d};
}

// ---------------------------------------------------------------------------
// Checkpoint (structured JSON; doubles are written in shortest round-trip form)

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"num_identities", c.num_identities}, {"physio_len", c.physio_len},   {"image_side", c.image_side},
          {"conv_channels", c.conv_channels},   {"lstm_layers", c.lstm_layers}, {"lstm_hidden", c.lstm_hidden},
          {"d_img", c.d_img},                   {"d_phys", c.d_phys},
          {"loss", {{"lambda_ver", c.loss.lambda_ver}, {"lambda_id", c.loss.lambda_id}, {"margin", c.loss.margin}}}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.num_identities = j.at("num_identities").get<std::size_t>();
  c.physio_len = j.at("physio_len").get<std::size_t>();
  c.image_side = j.at("image_side").get<std::size_t>();
  c.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
  c.lstm_layers = j.at("lstm_layers").get<std::size_t>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.d_img = j.at("d_img").get<std::size_t>();
  c.d_phys = j.at("d_phys").get<std::size_t>();
  const auto& l = j.at("loss");
  c.loss = {l.at("lambda_ver").get<double>(), l.at("lambda_id").get<double>(), l.at("margin").get<double>()};
  return c;
}

inline nlohmann::json checkpoint_to_json(const ModelParams& p) {
  nlohmann::json j;
  j["format"] = "pri-mmsnn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(p.config);
  j["seed"] = p.seed;
  j["normalization"] = {{"mean", p.physio_mean}, {"sd", p.physio_sd}};
  j["identities"] = p.identity_names;
  auto tensors = nlohmann::json::array();
  p.for_each_tensor([&](const Tensor& t) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"data", t.data}});
  });
  j["tensors"] = tensors;
  return j;
}

inline ModelParams checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "pri-mmsnn-checkpoint") throw FormatError("not an mmSNN checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    ModelParams p = init_model(config_from_json(j.at("config")), j.at("seed").get<std::uint64_t>());
    p.physio_mean = j.at("normalization").at("mean").get<double>();
    p.physio_sd = j.at("normalization").at("sd").get<double>();
    p.identity_names = j.at("identities").get<std::vector<std::string>>();
    const auto& tensors = j.at("tensors");
    std::size_t k = 0;
    p.for_each_tensor([&](Tensor& t) {
      if (k >= tensors.size()) throw FormatError("checkpoint is missing tensor " + t.name);
      const auto& e = tensors[k++];
      if (e.at("name").get<std::string>() != t.name || e.at("shape").get<std::vector<std::size_t>>() != t.shape) {
        throw FormatError("checkpoint tensor " + e.at("name").get<std::string>() + " does not match " + t.name);
      }
      auto data = e.at("data").get<std::vector<double>>();
      if (data.size() != t.size()) throw FormatError("checkpoint tensor " + t.name + " has wrong size");
      t.data = std::move(data);
    });
    if (k != tensors.size()) throw FormatError("checkpoint has extra tensors");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  ingest::detail::write_file(path, checkpoint_to_json(p).dump() + "\n");
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(nlohmann::json::parse(ingest::detail::read_file(path)));
}

}  // namespace pri::mmsnn
