#pragma once

// Central-finite-difference gradient harness shared by the unit and acceptance suites.
// Dropout stays off (inference-mode forward) so the loss surface is deterministic.

#include <algorithm>
#include <cmath>

#include "armarecon/nn.hpp"

namespace gradient_check {

inline double loss_at(const armarecon::ModelParams& params, const armarecon::PropagationOps& ops,
                      const Eigen::MatrixXd& h, const std::vector<int>& labels,
                      const std::vector<std::uint8_t>& mask, double lambda) {
  armarecon::SplitMix64 rng(0);
  armarecon::ForwardCache cache;
  armarecon::model_forward(params, ops, h, /*training=*/false, rng, &cache);
  return armarecon::joint_loss(cache.logits, labels, mask, cache.reconstruction, h, lambda);
}

/// Max relative error between analytic gradients and central differences over every
/// parameter of the model.
inline double max_gradient_error(armarecon::ModelParams& params,
                                 const armarecon::PropagationOps& ops, const Eigen::MatrixXd& h,
                                 const std::vector<int>& labels,
                                 const std::vector<std::uint8_t>& mask, double lambda,
                                 double eps = 1e-5) {
  armarecon::SplitMix64 rng(0);
  armarecon::ForwardCache cache;
  armarecon::model_forward(params, ops, h, /*training=*/false, rng, &cache);
  armarecon::ModelParams grads = armarecon::backward(params, ops, h, labels, mask, lambda, cache);

  auto views = armarecon::parameter_views(params);
  auto grad_views = armarecon::parameter_views(grads);
  double worst = 0.0;
  for (std::size_t t = 0; t < views.size(); ++t) {
    for (long i = 0; i < views[t].size; ++i) {
      double& x = views[t].data[i];
      const double saved = x;
      x = saved + eps;
      const double plus = loss_at(params, ops, h, labels, mask, lambda);
      x = saved - eps;
      const double minus = loss_at(params, ops, h, labels, mask, lambda);
      x = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      const double analytic = grad_views[t].data[i];
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(fd - analytic) / denom);
    }
  }
  return worst;
}

}  // namespace gradient_check
