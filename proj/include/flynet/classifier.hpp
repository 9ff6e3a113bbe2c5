#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "flynet/adam.hpp"
#include "flynet/encoder.hpp"
#include "flynet/error.hpp"
#include "flynet/rng.hpp"

namespace flynet {

/// Linear R-way place classifier over binary codes.
struct DenseHead {
  Eigen::MatrixXd weights;  // R x n
  Eigen::VectorXd bias;     // R

  static DenseHead zeros(std::size_t places, std::size_t code_bits) {
    const auto r = static_cast<Eigen::Index>(places);
    return {Eigen::MatrixXd::Zero(r, static_cast<Eigen::Index>(code_bits)), Eigen::VectorXd::Zero(r)};
  }

  /// Uniform in +-1/sqrt(n), zero bias.
  static DenseHead random(std::size_t places, std::size_t code_bits, std::uint64_t seed) {
    auto head = zeros(places, code_bits);
    const double bound = 1.0 / std::sqrt(static_cast<double>(code_bits));
    Rng rng(seed);
    for (Eigen::Index r = 0; r < head.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < head.weights.cols(); ++c) head.weights(r, c) = rng.uniform(-bound, bound);
    return head;
  }

  std::size_t places() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  std::size_t code_bits() const noexcept { return static_cast<std::size_t>(weights.cols()); }

  bool operator==(const DenseHead& o) const {
    return weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
           weights == o.weights && bias == o.bias;
  }
};

/// Per-place probabilities for one observation.
struct ScoreVector {
  std::vector<double> scores;
  std::size_t argmax = 0;

  std::size_t size() const noexcept { return scores.size(); }
  double max() const { return scores[argmax]; }

  /// Wraps probabilities and records their argmax (first on ties).
  static ScoreVector from_scores(std::vector<double> values) {
    ScoreVector s{std::move(values), 0};
    s.argmax = static_cast<std::size_t>(std::max_element(s.scores.begin(), s.scores.end()) - s.scores.begin());
    return s;
  }
};

/// Numerically stable softmax (max subtraction).
inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

inline ScoreVector to_score_vector(const Eigen::VectorXd& probabilities) {
  return ScoreVector::from_scores(std::vector<double>(probabilities.data(), probabilities.data() + probabilities.size()));
}

inline Eigen::VectorXd head_logits(const DenseHead& head, const BinaryDescriptor& d) {
  if (d.size() != head.code_bits())
    throw DataError("descriptor has " + std::to_string(d.size()) + " bits, head expects " +
                    std::to_string(head.code_bits()));
  Eigen::VectorXd logits = head.bias;
  for (std::size_t j = 0; j < d.size(); ++j)
    if (d.test(j)) logits += head.weights.col(static_cast<Eigen::Index>(j));
  return logits;
}

inline ScoreVector forward(const DenseHead& head, const BinaryDescriptor& d) {
  return to_score_vector(softmax(head_logits(head, d)));
}

inline std::vector<ScoreVector> forward_all(const DenseHead& head, std::span<const BinaryDescriptor> ds) {
  std::vector<ScoreVector> out;
  out.reserve(ds.size());
  for (const auto& d : ds) out.push_back(forward(head, d));
  return out;
}

struct HeadGradient {
  double loss = 0.0;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Mean softmax cross-entropy over the batch and its analytic gradient.
inline HeadGradient loss_and_grad(const DenseHead& head, std::span<const BinaryDescriptor> batch,
                                  std::span<const std::size_t> labels) {
  if (batch.empty()) throw DataError("empty training batch");
  if (batch.size() != labels.size()) throw DataError("batch and label counts differ");
  HeadGradient g{0.0, Eigen::MatrixXd::Zero(head.weights.rows(), head.weights.cols()),
                 Eigen::VectorXd::Zero(head.bias.size())};
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (labels[s] >= head.places())
      throw DataError("label " + std::to_string(labels[s]) + " out of range for " +
                      std::to_string(head.places()) + " places");
    const Eigen::VectorXd logits = head_logits(head, batch[s]);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    const auto label = static_cast<Eigen::Index>(labels[s]);
    g.loss += (lse - logits(label)) * inv;
    Eigen::VectorXd delta = (logits.array() - lse).exp();
    delta(label) -= 1.0;
    delta *= inv;
    g.bias += delta;
    for (std::size_t j = 0; j < batch[s].size(); ++j)
      if (batch[s].test(j)) g.weights.col(static_cast<Eigen::Index>(j)) += delta;
  }
  return g;
}

struct TrainConfig {
  AdamConfig adam;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(adam.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  }
};

inline double accuracy(const DenseHead& head, std::span<const BinaryDescriptor> ds,
                       std::span<const std::size_t> labels) {
  if (ds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Eigen::Index best = 0;
    head_logits(head, ds[i]).maxCoeff(&best);
    hits += static_cast<std::size_t>(best) == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

struct FitResult {
  DenseHead head;
  std::vector<double> epoch_loss;      // mean minibatch loss per epoch
  std::vector<double> epoch_accuracy;  // training accuracy after each epoch
};

/// Minibatch Adam on softmax cross-entropy. The output head has
/// max(label)+1 rows unless `places` is given.
inline FitResult fit(std::span<const BinaryDescriptor> descriptors, std::span<const std::size_t> labels,
                     const TrainConfig& cfg, std::size_t places = 0) {
  cfg.validate();
  if (descriptors.empty()) throw DataError("no training descriptors");
  if (descriptors.size() != labels.size()) throw DataError("descriptor and label counts differ");
  if (places == 0) places = *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t n = descriptors.front().size();

  FitResult result{DenseHead::random(places, n, derive_seed(cfg.seed, 0)), {}, {}};
  DenseHead& head = result.head;
  AdamMoments mw(head.weights.rows(), head.weights.cols());
  AdamMoments mb(head.bias.size(), 1);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(descriptors.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<BinaryDescriptor> batch;
  std::vector<std::size_t> batch_labels;
  long t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(descriptors[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      const auto g = loss_and_grad(head, batch, batch_labels);
      ++t;
      mw.step(head.weights, g.weights, cfg.adam, t);
      mb.step(head.bias, g.bias, cfg.adam, t);
      loss_sum += g.loss;
      ++batches;
    }
    if (!head.weights.allFinite() || !head.bias.allFinite())
      throw NumericError("classifier weights diverged at epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    result.epoch_accuracy.push_back(accuracy(head, descriptors, labels));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model footprint

enum class ModelKind { flynet, flynet_rnn, flynet_cann };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::flynet: return "FlyNet";
    case ModelKind::flynet_rnn: return "FlyNet+RNN";
    case ModelKind::flynet_cann: return "FlyNet+CANN";
  }
  return "?";
}

struct FootprintDims {
  std::size_t code_bits = 64;
  std::size_t places = 1000;
  std::size_t rnn_hidden = 512;
  std::size_t cann_units = 1002;
  std::size_t cann_kernel_width = 7;
};

/// Layer, parameter and neuron counts.
///
/// `params` follows the reporting convention: FlyNet counts its FC head
/// weights and biases; FlyNet+CANN adds the CANN's pre-assigned excitatory
/// weights (units x kernel width); FlyNet+RNN counts the recurrent stage's
/// input, recurrent and output weights plus biases. `weights_only` drops all
/// biases and `all_params` sums every weight and bias in the whole pipeline.
struct Footprint {
  std::size_t layers = 0;
  std::size_t params = 0;
  std::size_t weights_only = 0;
  std::size_t all_params = 0;
  std::size_t neurons = 0;
};

inline Footprint count_footprint(ModelKind kind, const FootprintDims& d = {}) {
  const std::size_t head_w = d.code_bits * d.places;
  const std::size_t head_b = d.places;
  switch (kind) {
    case ModelKind::flynet:
      return {2, head_w + head_b, head_w, head_w + head_b, d.code_bits + d.places};
    case ModelKind::flynet_cann: {
      const std::size_t kernel = d.cann_units * d.cann_kernel_width;
      return {3, head_w + head_b + kernel, head_w + kernel, head_w + head_b + kernel,
              d.code_bits + d.places + d.cann_units};
    }
    case ModelKind::flynet_rnn: {
      const std::size_t rnn_w = d.places * d.rnn_hidden + d.rnn_hidden * d.rnn_hidden + d.rnn_hidden * d.places;
      const std::size_t rnn_b = d.rnn_hidden + d.places;
      return {4, rnn_w + rnn_b, head_w + rnn_w, head_w + head_b + rnn_w + rnn_b,
              d.code_bits + d.places + d.rnn_hidden + d.places};
    }
  }
  return {};
}

}  // namespace flynet
