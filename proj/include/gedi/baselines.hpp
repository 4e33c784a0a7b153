#pragma once

#include <Eigen/Dense>

#include <vector>

#include "gedi/nets.hpp"

// Baseline machinery: balanced soft assignments via Sinkhorn-Knopp and the
// SwAV-style swapped-prediction step (stop-gradient targets). The JEM
// baseline needs nothing extra — it is the trainer with only the generative
// weight active.
namespace gedi {

struct SinkhornConfig {
  int iterations = 3;
  double epsilon = 0.05;

  void validate() const;
};

// Starting from exp(scores / epsilon), alternately normalizes columns to sum
// n/c and rows to sum 1, in the log domain. Returns a row-stochastic
// assignment matrix with near-balanced column sums.
Eigen::MatrixXd sinkhorn_knopp(const Eigen::MatrixXd& scores, const SinkhornConfig& cfg);

struct SwavStepResult {
  double loss = 0.0;                          // minimized swapped-prediction CE
  std::vector<Eigen::MatrixXd> ascent_grads;  // gradients of -loss, aligned with
                                              // SwavParams::matrices()
};

// Swapped-prediction loss with the targets supplied (already detached):
//   0.5/n * [ sum CE(q_b, softmax(scores_a/tau)) + sum CE(q_a, softmax(scores_b/tau)) ].
SwavStepResult swav_loss_with_targets(const SwavParams& params, const Eigen::MatrixXd& x_a,
                                      const Eigen::MatrixXd& x_b, const Eigen::MatrixXd& q_a,
                                      const Eigen::MatrixXd& q_b);

// Full step: Sinkhorn targets from each view's scores/tau (gradient-blocked),
// swapped cross-entropy on the other view. Prototype re-normalization is the
// caller's job after applying the update.
SwavStepResult swav_step(const SwavParams& params, const Eigen::MatrixXd& x_a,
                         const Eigen::MatrixXd& x_b, const SinkhornConfig& cfg);

}  // namespace gedi
