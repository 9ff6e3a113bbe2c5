#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flynet/adam.hpp"
#include "flynet/classifier.hpp"
#include "flynet/error.hpp"
#include "flynet/match.hpp"
#include "flynet/rng.hpp"

namespace flynet {

/// Vanilla Elman network over per-frame score vectors:
///   h_t = tanh(W_in s_t + W_rec h_{t-1} + b_rec),  logits_t = W_out h_t + b_out
struct RnnModel {
  Eigen::MatrixXd w_in;   // H x R
  Eigen::MatrixXd w_rec;  // H x H
  Eigen::VectorXd b_rec;  // H
  Eigen::MatrixXd w_out;  // R x H
  Eigen::VectorXd b_out;  // R

  std::size_t places() const noexcept { return static_cast<std::size_t>(w_in.cols()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w_in.rows()); }

  static RnnModel zeros(std::size_t places, std::size_t hidden) {
    const auto r = static_cast<Eigen::Index>(places);
    const auto h = static_cast<Eigen::Index>(hidden);
    return {Eigen::MatrixXd::Zero(h, r), Eigen::MatrixXd::Zero(h, h), Eigen::VectorXd::Zero(h),
            Eigen::MatrixXd::Zero(r, h), Eigen::VectorXd::Zero(r)};
  }

  /// Weights uniform in +-1/sqrt(fan_in), zero biases.
  static RnnModel random(std::size_t places, std::size_t hidden, std::uint64_t seed) {
    auto m = zeros(places, hidden);
    Rng rng(seed);
    const auto fill = [&](Eigen::MatrixXd& w, double fan_in) {
      const double bound = 1.0 / std::sqrt(fan_in);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    };
    // Score vectors carry unit L1 mass, so the input layer's effective fan-in is 1.
    fill(m.w_in, 1.0);
    fill(m.w_rec, static_cast<double>(hidden));
    fill(m.w_out, static_cast<double>(hidden));
    return m;
  }

  bool all_finite() const {
    return w_in.allFinite() && w_rec.allFinite() && b_rec.allFinite() && w_out.allFinite() && b_out.allFinite();
  }

  bool operator==(const RnnModel& o) const {
    const auto same = [](const auto& a, const auto& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return same(w_in, o.w_in) && same(w_rec, o.w_rec) && same(b_rec, o.b_rec) && same(w_out, o.w_out) &&
           same(b_out, o.b_out);
  }
};

/// Stacks score vectors as columns (R x T).
inline Eigen::MatrixXd to_sequence(std::span<const ScoreVector> scores) {
  if (scores.empty()) return {};
  Eigen::MatrixXd seq(static_cast<Eigen::Index>(scores.front().size()), static_cast<Eigen::Index>(scores.size()));
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (scores[t].size() != scores.front().size()) throw DataError("score vectors differ in length");
    seq.col(static_cast<Eigen::Index>(t)) = Eigen::Map<const Eigen::VectorXd>(
        scores[t].scores.data(), static_cast<Eigen::Index>(scores[t].size()));
  }
  return seq;
}

struct RnnTrace {
  Eigen::MatrixXd hidden;  // H x T
  Eigen::MatrixXd logits;  // R x T
};

/// Runs the recurrence over the columns of `inputs` (R x T) from `h0`
/// (empty = zeros).
inline RnnTrace rnn_forward(const RnnModel& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& h0 = {}) {
  if (inputs.rows() != model.w_in.cols())
    throw DataError("rnn input has " + std::to_string(inputs.rows()) + " rows, model expects " +
                    std::to_string(model.w_in.cols()));
  const Eigen::Index steps = inputs.cols();
  RnnTrace tr{Eigen::MatrixXd(model.w_rec.rows(), steps), Eigen::MatrixXd(model.w_out.rows(), steps)};
  if (h0.size() != 0 && h0.size() != model.w_rec.rows()) throw DataError("initial hidden state has wrong size");
  Eigen::VectorXd h = h0.size() == 0 ? Eigen::VectorXd::Zero(model.w_rec.rows()) : h0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    h = (model.w_in * inputs.col(t) + model.w_rec * h + model.b_rec).array().tanh().matrix();
    tr.hidden.col(t) = h;
    tr.logits.col(t) = model.w_out * h + model.b_out;
  }
  return tr;
}

struct RnnGradient {
  double loss = 0.0;
  double norm = 0.0;  // global gradient norm before clipping
  RnnModel grads;
  Eigen::VectorXd last_hidden;
};

/// Mean per-step cross-entropy and full BPTT gradients within the window;
/// `h0` is treated as a constant. When the global gradient norm exceeds
/// `grad_clip` (> 0) the gradients are rescaled to it.
inline RnnGradient rnn_loss_and_grads(const RnnModel& model, const Eigen::MatrixXd& inputs,
                                      std::span<const std::size_t> labels, double grad_clip = 0.0,
                                      const Eigen::VectorXd& h0 = {}) {
  const Eigen::Index steps = inputs.cols();
  if (static_cast<std::size_t>(steps) != labels.size()) throw DataError("sequence and label lengths differ");
  if (steps == 0) throw DataError("empty training sequence");
  for (auto y : labels)
    if (y >= model.places())
      throw DataError("label " + std::to_string(y) + " out of range for " + std::to_string(model.places()) + " places");

  const auto tr = rnn_forward(model, inputs, h0);
  RnnGradient g{0.0, 0.0, RnnModel::zeros(model.places(), model.hidden()), tr.hidden.col(steps - 1)};
  const double inv = 1.0 / static_cast<double>(steps);
  const Eigen::Index hid = model.w_rec.rows();
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hid);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(t)]);
    const Eigen::VectorXd logits = tr.logits.col(t);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    g.loss += (lse - logits(y)) * inv;
    Eigen::VectorXd d_out = (logits.array() - lse).exp();
    d_out(y) -= 1.0;
    d_out *= inv;

    const auto h = tr.hidden.col(t);
    g.grads.w_out.noalias() += d_out * h.transpose();
    g.grads.b_out += d_out;
    const Eigen::VectorXd dh = model.w_out.transpose() * d_out + dh_next;
    const Eigen::VectorXd da = dh.array() * (1.0 - h.array().square());
    g.grads.w_in.noalias() += da * inputs.col(t).transpose();
    if (t > 0) g.grads.w_rec.noalias() += da * tr.hidden.col(t - 1).transpose();
    else if (h0.size() != 0) g.grads.w_rec.noalias() += da * h0.transpose();
    g.grads.b_rec += da;
    dh_next.noalias() = model.w_rec.transpose() * da;
  }

  g.norm = std::sqrt(g.grads.w_in.squaredNorm() + g.grads.w_rec.squaredNorm() + g.grads.b_rec.squaredNorm() +
                     g.grads.w_out.squaredNorm() + g.grads.b_out.squaredNorm());
  if (grad_clip > 0.0 && g.norm > grad_clip) {
    const double s = grad_clip / g.norm;
    g.grads.w_in *= s;
    g.grads.w_rec *= s;
    g.grads.b_rec *= s;
    g.grads.w_out *= s;
    g.grads.b_out *= s;
  }
  return g;
}

struct RnnTrainConfig {
  AdamConfig adam{3e-4, 0.9, 0.999, 1e-8};
  std::size_t epochs = 30;
  std::size_t hidden = 512;
  std::size_t bptt_len = 20;
  double grad_clip = 5.0;
  std::uint64_t seed = 0;
  // Altered copies of the reference traverse added as training sequences;
  // copy k gets mild appearance change with sensor noise (k+1)*augment_noise.
  std::size_t augment_copies = 4;
  double augment_noise = 0.15;

  void validate() const {
    if (!(adam.learning_rate >= 0.0)) throw ConfigError("rnn.learning_rate must be >= 0");
    if (epochs < 1) throw ConfigError("rnn.epochs must be >= 1");
    if (hidden < 1) throw ConfigError("rnn.hidden must be >= 1");
    if (bptt_len < 1) throw ConfigError("rnn.bptt_len must be >= 1");
    if (!(augment_noise >= 0.0)) throw ConfigError("rnn.augment_noise must be >= 0");
  }
};

struct LabeledSequence {
  Eigen::MatrixXd inputs;  // R x T
  std::vector<std::size_t> labels;
};

struct RnnFitResult {
  RnnModel model;
  std::vector<double> epoch_loss;
};

/// Truncated BPTT over windows of bptt_len frames, each starting from
/// h_0 = 0. Window starts are spaced bptt_len/2 apart with a random phase per
/// epoch, so a window may begin anywhere in a sequence and absolute time
/// carries no label information. One Adam update per window; window order is
/// shuffled per epoch.
inline RnnFitResult fit_rnn(std::span<const LabeledSequence> data, const RnnTrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw DataError("no rnn training sequences");
  const auto places = static_cast<std::size_t>(data.front().inputs.rows());
  if (places == 0) throw DataError("rnn training inputs have zero rows");
  for (const auto& seq : data) {
    if (static_cast<std::size_t>(seq.inputs.rows()) != places) throw DataError("rnn sequences differ in width");
    if (static_cast<std::size_t>(seq.inputs.cols()) != seq.labels.size())
      throw DataError("sequence and label lengths differ");
  }

  struct Window {
    std::size_t seq;
    Eigen::Index start;
    Eigen::Index len;
  };
  const auto len = static_cast<Eigen::Index>(cfg.bptt_len);
  const Eigen::Index stride = std::max<Eigen::Index>(1, len / 2);

  RnnFitResult result{RnnModel::random(places, cfg.hidden, derive_seed(cfg.seed, 0)), {}};
  RnnModel& m = result.model;
  AdamMoments a_in(m.w_in.rows(), m.w_in.cols()), a_rec(m.w_rec.rows(), m.w_rec.cols()),
      a_brec(m.b_rec.size(), 1), a_out(m.w_out.rows(), m.w_out.cols()), a_bout(m.b_out.size(), 1);
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<Window> windows;
  long t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    windows.clear();
    for (std::size_t s = 0; s < data.size(); ++s) {
      const Eigen::Index steps = data[s].inputs.cols();
      if (steps == 0) continue;
      const auto phase = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(std::min(stride, steps))));
      if (phase > 0) windows.push_back({s, 0, std::min(phase, steps)});
      for (Eigen::Index start = phase; start < steps; start += stride)
        windows.push_back({s, start, std::min(len, steps - start)});
    }
    if (windows.empty()) throw DataError("rnn training sequences are all empty");
    rng.shuffle(std::span<Window>(windows));
    double loss_sum = 0.0;
    for (const auto& w : windows) {
      const auto& seq = data[w.seq];
      const auto labels = std::span<const std::size_t>(seq.labels).subspan(static_cast<std::size_t>(w.start),
                                                                            static_cast<std::size_t>(w.len));
      const auto g = rnn_loss_and_grads(m, seq.inputs.middleCols(w.start, w.len), labels, cfg.grad_clip);
      ++t;
      a_in.step(m.w_in, g.grads.w_in, cfg.adam, t);
      a_rec.step(m.w_rec, g.grads.w_rec, cfg.adam, t);
      a_brec.step(m.b_rec, g.grads.b_rec, cfg.adam, t);
      a_out.step(m.w_out, g.grads.w_out, cfg.adam, t);
      a_bout.step(m.b_out, g.grads.b_out, cfg.adam, t);
      loss_sum += g.loss;
    }
    if (!m.all_finite()) throw NumericError("rnn weights diverged at epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(loss_sum / static_cast<double>(windows.size()));
  }
  return result;
}

/// Per step: argmax of softmax(logits_t), confidence = its probability.
/// With `context` > 0 each step is read out after running the network from
/// h = 0 over only the last `context` frames ending at it, which matches the
/// window length seen in training; 0 runs once over the whole sequence.
inline std::vector<PlaceMatch> rnn_match(const RnnModel& model, const Eigen::MatrixXd& inputs,
                                         std::size_t context = 0) {
  const Eigen::Index steps = inputs.cols();
  const auto readout = [](const Eigen::VectorXd& logits) {
    const Eigen::VectorXd p = softmax(logits);
    Eigen::Index best = 0;
    const double score = p.maxCoeff(&best);
    return PlaceMatch{static_cast<std::size_t>(best), score};
  };
  std::vector<PlaceMatch> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (context == 0) {
    const auto tr = rnn_forward(model, inputs);
    for (Eigen::Index t = 0; t < steps; ++t) out.push_back(readout(tr.logits.col(t)));
    return out;
  }
  const auto ctx = static_cast<Eigen::Index>(context);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Eigen::Index first = std::max<Eigen::Index>(0, t - ctx + 1);
    const auto tr = rnn_forward(model, inputs.middleCols(first, t - first + 1));
    out.push_back(readout(tr.logits.col(tr.logits.cols() - 1)));
  }
  return out;
}

}  // namespace flynet
