#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "gedi/nets.hpp"
#include "gedi/rng.hpp"

// Energy-based view of the classifier: the unnormalized log-density of x is
// the log-sum-exp of the scaled class logits; the partition function is never
// computed. SGLD with a persistent replay buffer draws approximate samples.
namespace gedi {

struct SgldConfig {
  int steps = 1;                    // T >= 0
  double step_size = 0.01 * 0.01 / 2.0;  // alpha > 0
  double noise_std = 0.01;          // sigma >= 0
  double reinit_prob = 0.05;        // per-sample i.i.d. Bernoulli
  Eigen::VectorXd init_low;         // per-dimension reinit bounds
  Eigen::VectorXd init_high;
  // Optional clamp of iterates to clamp_factor x the init box; off by default.
  bool clamp_to_box = false;
  double clamp_factor = 3.0;

  void validate() const;
};

// Fixed-capacity store of persistent SGLD chain states, pre-filled uniformly
// over [init_low, init_high] per dimension. Owns the sampler's random stream.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, const Eigen::VectorXd& init_low, const Eigen::VectorXd& init_high,
               std::uint64_t seed);

  int capacity() const { return static_cast<int>(entries_.rows()); }
  Eigen::Index dim() const { return entries_.cols(); }

  Eigen::MatrixXd& entries() { return entries_; }
  const Eigen::MatrixXd& entries() const { return entries_; }

  Rng& rng() { return rng_; }
  std::string rng_state() const { return rng_.save_state(); }
  void set_rng_state(const std::string& s) { rng_.load_state(s); }

 private:
  Eigen::MatrixXd entries_;
  Rng rng_;
};

// Batch score function: rows of the returned matrix are the gradients of the
// unnormalized log-density with respect to each input row.
using ScoreFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// log p~(x) = logsumexp_y f_y(enc(x)) / tau, per row.
ag::Var log_unnorm_density(ag::Tape& t, const BoundModel& m, ag::Var x);
Eigen::VectorXd log_unnorm_density(const ModelParams& params, const Eigen::MatrixXd& x);

// d log p~ / dx for each row; parameters held fixed.
Eigen::MatrixXd input_score(const ModelParams& params, const Eigen::MatrixXd& x);
ScoreFn model_score_fn(const ModelParams& params);

// Draws m distinct buffer slots, reinitializes each with probability
// reinit_prob, runs `steps` SGLD updates
//   x <- x + step_size * score(x) + noise_std * eps,   eps ~ N(0, I)
// and writes the final states back to their slots before returning them.
// No gradients flow to model parameters through sampling.
Eigen::MatrixXd sgld_sample(const ScoreFn& score, ReplayBuffer& buffer, const SgldConfig& cfg,
                            int m);
Eigen::MatrixXd sgld_sample(const ModelParams& params, ReplayBuffer& buffer,
                            const SgldConfig& cfg, int m);

// Gradient of  mean_i log p~(data_i) - mean_j log p~(model_j)  with respect to
// the parameters (the ascent direction of the generative term), plus the
// mean-difference diagnostic itself. model_x is treated as fixed data.
struct GenLossGrad {
  std::vector<Eigen::MatrixXd> grads;  // aligned with ModelParams::matrices()
  double diagnostic = 0.0;             // mean data log-density minus mean model log-density
};
GenLossGrad gen_loss_grad(const ModelParams& params, const Eigen::MatrixXd& data_x,
                          const Eigen::MatrixXd& model_x);

// Per-dimension bounds of the data expanded by `margin` of the span per side
// (the replay-buffer init support when the config gives none).
void data_box(const Eigen::MatrixXd& points, double margin, Eigen::VectorXd& low,
              Eigen::VectorXd& high);

}  // namespace gedi
