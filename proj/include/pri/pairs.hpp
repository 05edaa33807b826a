#pragma once

// Similar / dissimilar pair sampling and accuracy metrics.
// similar    : same identity and same gesture (y = 1)
// dissimilar : different identities, any gestures (y = 0)
// Same identity with different gestures is neither and never emitted.

#include <algorithm>
#include <string>
#include <vector>

#include "pri/error.hpp"
#include "pri/gesture_types.hpp"
#include "pri/rng.hpp"

namespace pri::attack {

struct WindowRef {
  std::size_t id = 0;  // window id, unique within a dataset
  std::size_t identity = 0;
  GestureClass gesture = GestureClass::Up;
};

struct SamplePair {
  std::size_t a = 0, b = 0;  // window ids, a < b
  int y = 0;
  std::size_t id_a = 0, id_b = 0;
  GestureClass gesture_a = GestureClass::Up, gesture_b = GestureClass::Up;

  bool operator==(const SamplePair&) const = default;
};

inline bool pair_label_consistent(const SamplePair& p) {
  return (p.y == 1) == (p.id_a == p.id_b && p.gesture_a == p.gesture_b);
}

struct PairCapacity {
  std::size_t similar = 0, dissimilar = 0;
};

inline PairCapacity pair_capacity(const std::vector<WindowRef>& windows) {
  PairCapacity c;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      if (windows[i].identity != windows[j].identity) {
        ++c.dissimilar;
      } else if (windows[i].gesture == windows[j].gesture) {
        ++c.similar;
      }
    }
  }
  return c;
}

namespace detail {

/// k items drawn uniformly without replacement, returned in candidate order.
inline std::vector<SamplePair> draw(std::vector<SamplePair> candidates, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
  }
  candidates.resize(k);
  std::sort(candidates.begin(), candidates.end(),
            [](const SamplePair& x, const SamplePair& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  return candidates;
}

}  // namespace detail

/// Unordered pairs of distinct windows. Throws SamplingError naming the achievable maxima
/// when either count exceeds what the windows allow.
inline std::vector<SamplePair> build_pairs(std::vector<WindowRef> windows, std::size_t n_similar,
                                           std::size_t n_dissimilar, std::uint64_t seed) {
  std::sort(windows.begin(), windows.end(), [](const WindowRef& x, const WindowRef& y) { return x.id < y.id; });
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i].id == windows[i - 1].id) throw ArgumentError("build_pairs: duplicate window id");
  }
  std::vector<SamplePair> similar, dissimilar;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      const auto& a = windows[i];
      const auto& b = windows[j];
      SamplePair p{a.id, b.id, 0, a.identity, b.identity, a.gesture, b.gesture};
      if (a.identity != b.identity) {
        dissimilar.push_back(p);
      } else if (a.gesture == b.gesture) {
        p.y = 1;
        similar.push_back(p);
      }
    }
  }
  if (n_similar > similar.size() || n_dissimilar > dissimilar.size()) {
    throw SamplingError("cannot sample " + std::to_string(n_similar) + " similar and " + std::to_string(n_dissimilar) +
                        " dissimilar pairs; achievable maxima are " + std::to_string(similar.size()) +
                        " similar and " + std::to_string(dissimilar.size()) + " dissimilar");
  }
  Rng rng(derive_seed(seed, 0x9a15));
  auto out = detail::draw(std::move(similar), n_similar, rng);
  auto neg = detail::draw(std::move(dissimilar), n_dissimilar, rng);
  out.insert(out.end(), neg.begin(), neg.end());
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

template <typename T>
double accuracy(const std::vector<T>& predictions, const std::vector<T>& truths) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    throw ArgumentError("accuracy: need equal-length, non-empty prediction and truth vectors");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == truths[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  double accuracy() const {
    if (total() == 0) throw ArgumentError("accuracy: empty confusion matrix");
    return static_cast<double>(tp + tn) / static_cast<double>(total());
  }
};

inline Confusion confusion(const std::vector<bool>& predicted_similar, const std::vector<bool>& truly_similar) {
  if (predicted_similar.size() != truly_similar.size()) throw ArgumentError("confusion: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truly_similar.size(); ++i) {
    if (truly_similar[i]) {
      (predicted_similar[i] ? c.tp : c.fn) += 1;
    } else {
      (predicted_similar[i] ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

/// Distance threshold where false-accept and false-reject rates are closest
/// (similar iff distance <= threshold); ties go to the smaller threshold.
inline double equal_error_threshold(const std::vector<double>& distances, const std::vector<bool>& similar) {
  if (distances.empty() || distances.size() != similar.size()) throw ArgumentError("equal_error_threshold: bad input");
  std::size_t n_pos = 0;
  for (bool s : similar) n_pos += s ? 1 : 0;
  const std::size_t n_neg = similar.size() - n_pos;
  std::vector<std::size_t> order(distances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return distances[x] != distances[y] ? distances[x] < distances[y] : x < y;
  });
  double best_gap = 2.0, best = distances[order.front()];
  std::size_t accepted_pos = 0, accepted_neg = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (similar[order[k]] ? accepted_pos : accepted_neg) += 1;
    if (k + 1 < order.size() && distances[order[k + 1]] == distances[order[k]]) continue;
    const double frr = n_pos ? 1.0 - static_cast<double>(accepted_pos) / static_cast<double>(n_pos) : 0.0;
    const double far = n_neg ? static_cast<double>(accepted_neg) / static_cast<double>(n_neg) : 0.0;
    const double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      best = distances[order[k]];
    }
  }
  return best;
}

}  // namespace pri::attack
