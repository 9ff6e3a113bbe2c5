#include <gtest/gtest.h>

#include <cmath>

#include "flynet/rnn.hpp"
#include "gradcheck.hpp"

using namespace flynet;

namespace {

Eigen::MatrixXd random_probabilities(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, t) = rng.uniform();
    x.col(t) /= x.col(t).sum();
  }
  return x;
}

std::vector<std::size_t> cyclic_labels(std::size_t n, std::size_t places) {
  std::vector<std::size_t> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = i % places;
  return l;
}

}  // namespace

TEST(RnnForward, ZeroModel) {
  auto m = RnnModel::zeros(3, 4);
  m.b_out << 0.1, -0.2, 0.3;
  const auto tr = rnn_forward(m, random_probabilities(3, 5, 1));
  EXPECT_EQ(tr.hidden.cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index t = 0; t < 5; ++t) EXPECT_EQ(tr.logits.col(t), m.b_out);
}

TEST(RnnForward, HandComputedThreeSteps) {
  auto m = RnnModel::zeros(2, 2);
  m.w_in << 0.5, -0.3, 0.2, 0.8;
  m.w_rec << 0.1, 0.4, -0.6, 0.3;
  m.b_rec << 0.05, -0.1;
  m.w_out << 1.0, -1.0, 0.5, 2.0;
  m.b_out << 0.0, 0.1;
  Eigen::MatrixXd x(2, 3);
  x << 1.0, 0.2, 0.0, 0.0, 0.8, 1.0;

  double h0 = 0, h1 = 0;
  const double xs[3][2] = {{1.0, 0.0}, {0.2, 0.8}, {0.0, 1.0}};
  const auto tr = rnn_forward(m, x);
  for (int t = 0; t < 3; ++t) {
    const double a0 = 0.5 * xs[t][0] - 0.3 * xs[t][1] + 0.1 * h0 + 0.4 * h1 + 0.05;
    const double a1 = 0.2 * xs[t][0] + 0.8 * xs[t][1] - 0.6 * h0 + 0.3 * h1 - 0.1;
    h0 = std::tanh(a0);
    h1 = std::tanh(a1);
    EXPECT_NEAR(tr.hidden(0, t), h0, 1e-15);
    EXPECT_NEAR(tr.hidden(1, t), h1, 1e-15);
    EXPECT_NEAR(tr.logits(0, t), h0 - h1, 1e-15);
    EXPECT_NEAR(tr.logits(1, t), 0.5 * h0 + 2.0 * h1 + 0.1, 1e-15);
  }
}

TEST(RnnForward, SingleStepIsFeedforward) {
  const auto m = RnnModel::random(6, 5, 3);
  const auto x = random_probabilities(6, 1, 4);
  const auto tr = rnn_forward(m, x);
  const Eigen::VectorXd h = (m.w_in * x.col(0) + m.b_rec).array().tanh().matrix();
  EXPECT_LT((tr.hidden.col(0) - h).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RnnForward, HiddenStaysInTanhRange) {
  auto m = RnnModel::random(10, 8, 5);
  m.w_rec *= 20.0;
  const auto tr = rnn_forward(m, random_probabilities(10, 50, 6));
  EXPECT_LE(tr.hidden.cwiseAbs().maxCoeff(), 1.0);
}

TEST(RnnForward, InitialStateIsUsed) {
  const auto m = RnnModel::random(4, 3, 2);
  const auto x = random_probabilities(4, 2, 3);
  const Eigen::VectorXd h0 = Eigen::VectorXd::Constant(3, 0.5);
  const auto tr = rnn_forward(m, x, h0);
  const Eigen::VectorXd h = (m.w_in * x.col(0) + m.w_rec * h0 + m.b_rec).array().tanh().matrix();
  EXPECT_LT((tr.hidden.col(0) - h).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(rnn_forward(m, x, Eigen::VectorXd::Zero(5)), DataError);
  EXPECT_THROW(rnn_forward(m, random_probabilities(3, 2, 1)), DataError);
}

TEST(RnnLoss, ZeroModelGivesLogR) {
  const auto g = rnn_loss_and_grads(RnnModel::zeros(7, 3), random_probabilities(7, 4, 1), cyclic_labels(4, 7));
  EXPECT_NEAR(g.loss, std::log(7.0), 1e-12);
}

TEST(RnnLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1, 2, 3}) EXPECT_LT(test::rnn_gradcheck(seed), 1e-4);
}

TEST(RnnLoss, GradientWithCarriedStateMatchesFiniteDifferences) {
  auto m = RnnModel::random(5, 4, 9);
  const auto x = random_probabilities(5, 6, 10);
  const Eigen::VectorXd h0 = Eigen::VectorXd::LinSpaced(4, -0.5, 0.5);
  const auto labels = cyclic_labels(6, 5);
  const auto g = rnn_loss_and_grads(m, x, labels, 0.0, h0);
  const auto loss = [&] { return rnn_loss_and_grads(m, x, labels, 0.0, h0).loss; };
  EXPECT_LT(test::worst_fd_error(m.w_rec, g.grads.w_rec, loss), 1e-4);
  EXPECT_LT(test::worst_fd_error(m.w_in, g.grads.w_in, loss), 1e-4);
}

TEST(RnnLoss, SingleStepMatchesClassifierCrossEntropy) {
  const auto m = RnnModel::random(5, 4, 7);
  const auto x = random_probabilities(5, 1, 8);
  const std::vector<std::size_t> label{3};
  const Eigen::VectorXd h = (m.w_in * x.col(0) + m.b_rec).array().tanh().matrix();
  const Eigen::VectorXd p = softmax(m.w_out * h + m.b_out);
  EXPECT_NEAR(rnn_loss_and_grads(m, x, label).loss, -std::log(p(3)), 1e-12);
}

TEST(RnnLoss, ClippingBoundsGlobalNorm) {
  auto m = RnnModel::random(5, 4, 7);
  m.w_out *= 50.0;
  const auto x = random_probabilities(5, 6, 8);
  const auto labels = cyclic_labels(6, 5);
  const auto raw = rnn_loss_and_grads(m, x, labels);
  ASSERT_GT(raw.norm, 0.1);
  const auto clipped = rnn_loss_and_grads(m, x, labels, 0.1);
  const auto& c = clipped.grads;
  const double norm = std::sqrt(c.w_in.squaredNorm() + c.w_rec.squaredNorm() + c.b_rec.squaredNorm() +
                                c.w_out.squaredNorm() + c.b_out.squaredNorm());
  EXPECT_NEAR(norm, 0.1, 1e-12);
  EXPECT_NEAR(clipped.norm, raw.norm, 1e-12);
}

TEST(FitRnn, ZeroLearningRateLeavesModel) {
  const std::vector<LabeledSequence> data{{random_probabilities(6, 30, 1), cyclic_labels(30, 6)}};
  RnnTrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 2;
  cfg.seed = 4;
  cfg.adam.learning_rate = 0.0;
  EXPECT_EQ(fit_rnn(data, cfg).model, RnnModel::random(6, 8, derive_seed(4, 0)));
}

TEST(FitRnn, Reproducible) {
  const std::vector<LabeledSequence> data{{random_probabilities(6, 40, 1), cyclic_labels(40, 6)},
                                          {random_probabilities(6, 25, 2), cyclic_labels(25, 6)}};
  RnnTrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 3;
  cfg.bptt_len = 7;
  cfg.seed = 11;
  const auto a = fit_rnn(data, cfg), b = fit_rnn(data, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(FitRnn, LearnsCleanSequence) {
  // Inputs are one-hot place indicators; the net must learn the identity.
  const std::size_t places = 10;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 40);
  for (Eigen::Index t = 0; t < 40; ++t) x(t % 10, t) = 1.0;
  const std::vector<LabeledSequence> data{{x, cyclic_labels(40, places)}};
  RnnTrainConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 150;
  cfg.bptt_len = 8;
  cfg.adam.learning_rate = 0.01;
  const auto res = fit_rnn(data, cfg);
  EXPECT_LT(res.epoch_loss.back(), 0.5 * res.epoch_loss.front());
  const auto matches = rnn_match(res.model, x);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < 40; ++t) hits += matches[t].ref == t % places;
  EXPECT_GE(hits, 36u);
}

TEST(FitRnn, InvalidInputs) {
  RnnTrainConfig cfg;
  EXPECT_THROW(fit_rnn({}, cfg), DataError);
  cfg.bptt_len = 0;
  const std::vector<LabeledSequence> data{{random_probabilities(3, 4, 1), cyclic_labels(4, 3)}};
  EXPECT_THROW(fit_rnn(data, cfg), ConfigError);
}

TEST(RnnMatch, Readout) {
  auto m = RnnModel::zeros(4, 2);
  const auto x = random_probabilities(4, 3, 1);
  for (const auto& p : rnn_match(m, x)) EXPECT_NEAR(p.score, 0.25, 1e-15);
  m.b_out << 0.0, 5.0, 1.0, 0.0;
  for (const auto& p : rnn_match(m, x)) EXPECT_EQ(p.ref, std::optional<std::size_t>(1));
  // Order-preserving transform of the logits keeps the argmax.
  m.b_out = (m.b_out.array() * 3.0 + 2.0).matrix();
  for (const auto& p : rnn_match(m, x)) EXPECT_EQ(p.ref, std::optional<std::size_t>(1));
}
