#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace gedi {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam applied in the ascent direction.
struct AdamState {
  AdamConfig cfg;
  std::int64_t step = 0;
  std::vector<Eigen::MatrixXd> m;  // first moments, shape-matched to params
  std::vector<Eigen::MatrixXd> v;  // second moments

  static AdamState create(const AdamConfig& cfg, const std::vector<Eigen::MatrixXd*>& params);
};

// One update: params <- params + lr * m_hat / (sqrt(v_hat) + eps), moving in
// the direction of the supplied ascent gradients.
void adam_step(AdamState& state, const std::vector<Eigen::MatrixXd*>& params,
               const std::vector<Eigen::MatrixXd>& ascent_grads);

// Convenience for callers holding gradients of a loss to minimize.
void adam_step_descend(AdamState& state, const std::vector<Eigen::MatrixXd*>& params,
                       const std::vector<Eigen::MatrixXd>& descent_grads);

}  // namespace gedi
