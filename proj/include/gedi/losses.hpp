#pragma once

#include <Eigen/Dense>

#include <optional>

#include "gedi/autodiff.hpp"
#include "gedi/nets.hpp"

// The GEDI loss terms. All three are maximized:
//   L_GEN   - energy-based fit of the data density (gradient from ebm)
//   L_INV   - agreement of predictive distributions across augmented views
//   L_PRIOR - match of the batch marginal to the class prior
// L_INV <= 0 and L_PRIOR <= -H(prior) always; their sum is bounded by
// -H(prior) per instance.
namespace gedi {

// Marginal entries are clamped at this floor inside logs so collapse
// configurations stay finite.
inline constexpr double kMarginalFloor = 1e-12;

struct LossWeights {
  double gen = 1.0;
  double inv = 50.0;
  double prior = 10.0;

  void validate() const;
};

struct PriorSpec {
  Eigen::VectorXd probs;  // length c, non-negative, sums to 1

  static PriorSpec uniform(int c);
  void validate() const;
};

// -sum_y p_y ln max(q_y, eps_q), natural log.
double cross_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                     double eps_q = kMarginalFloor);

// -(1/n) sum_i CE(softmax(t_aug_i/tau), softmax(t_i/tau)). Gradients flow
// through both logit sets (no stop-gradient). With symmetrize, the
// role-swapped term is averaged in.
ag::Var inv_loss(ag::Tape& t, ag::Var logits_clean, ag::Var logits_aug, double tau,
                 bool symmetrize = false);

// -CE(prior, q) with q the column mean of softmax(t/tau) over the clean
// batch (per-instance form; identical for every instance). The column means
// are exactly summed, so the value is bit-for-bit invariant under any
// permutation of the batch rows.
ag::Var prior_loss(ag::Tape& t, ag::Var logits_clean, double tau, const PriorSpec& prior);

// The assembled objective on one tape. Skipped terms (zero weight) are never
// built, so their forward/backward paths do not execute at all.
struct GediTerms {
  ag::Var total{-1};
  ag::Var gen{-1};    // unweighted mean-difference surrogate, when built
  ag::Var inv{-1};    // unweighted L_INV, when built
  ag::Var prior{-1};  // unweighted L_PRIOR, when built
};

// x_aug must be given iff weights.inv > 0; model_x iff weights.gen > 0.
// The generative surrogate is mean log p~(x) - mean log p~(model_x) with
// model_x held fixed (its gradient is exactly the Eq.-7 estimator).
GediTerms gedi_objective(ag::Tape& t, const BoundModel& m, ag::Var x,
                         std::optional<ag::Var> x_aug, std::optional<ag::Var> model_x,
                         const LossWeights& weights, const PriorSpec& prior,
                         bool symmetrize_inv = false);

}  // namespace gedi
