#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace flynet {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for one parameter block.
class AdamMoments {
 public:
  AdamMoments() = default;
  AdamMoments(Eigen::Index rows, Eigen::Index cols)
      : m_(Eigen::MatrixXd::Zero(rows, cols)), v_(Eigen::MatrixXd::Zero(rows, cols)) {}

  /// Bias-corrected update for step `t` (1-based).
  template <typename Param, typename Grad>
  void step(Param& param, const Grad& grad, const AdamConfig& cfg, long t) {
    m_ = cfg.beta1 * m_ + (1.0 - cfg.beta1) * grad;
    v_ = cfg.beta2 * v_ + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    const double lr = cfg.learning_rate;
    param.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg.eps);
  }

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
};

}  // namespace flynet
