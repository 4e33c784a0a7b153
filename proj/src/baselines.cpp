#include "gedi/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace gedi {

void SinkhornConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("SinkhornConfig: iterations must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("SinkhornConfig: epsilon must be > 0");
}

namespace {

Eigen::VectorXd logsumexp_cols(const Eigen::MatrixXd& m) {
  Eigen::RowVectorXd mx = m.colwise().maxCoeff();
  return ((m.rowwise() - mx).array().exp().colwise().sum().log() + mx.array())
      .matrix()
      .transpose();
}

Eigen::VectorXd logsumexp_rows_plain(const Eigen::MatrixXd& m) {
  Eigen::VectorXd mx = m.rowwise().maxCoeff();
  return ((m.colwise() - mx).array().exp().rowwise().sum().log() + mx.array()).matrix();
}

}  // namespace

Eigen::MatrixXd sinkhorn_knopp(const Eigen::MatrixXd& scores, const SinkhornConfig& cfg) {
  cfg.validate();
  if (!scores.allFinite()) throw std::domain_error("sinkhorn_knopp: non-finite scores");
  const Eigen::Index n = scores.rows();
  const Eigen::Index c = scores.cols();
  if (n == 0 || c == 0) throw std::invalid_argument("sinkhorn_knopp: empty scores");

  // Log-domain scaling: L + u 1^T + 1 v^T with column sums n/c, row sums 1.
  Eigen::MatrixXd log_k = scores / cfg.epsilon;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(c);
  const double log_col_target = std::log(static_cast<double>(n) / static_cast<double>(c));
  for (int it = 0; it < cfg.iterations; ++it) {
    v = log_col_target - logsumexp_cols(log_k.colwise() + u).array();
    u = -logsumexp_rows_plain(log_k.rowwise() + v.transpose()).array();
  }
  Eigen::MatrixXd q =
      ((log_k.colwise() + u).rowwise() + v.transpose()).array().exp().matrix();
  // Final row normalization in the linear domain pins the row sums exactly.
  for (Eigen::Index i = 0; i < n; ++i) q.row(i) /= q.row(i).sum();
  if (!q.allFinite()) throw std::domain_error("sinkhorn_knopp: non-finite assignments");
  return q;
}

SwavStepResult swav_loss_with_targets(const SwavParams& params, const Eigen::MatrixXd& x_a,
                                      const Eigen::MatrixXd& x_b, const Eigen::MatrixXd& q_a,
                                      const Eigen::MatrixXd& q_b) {
  if (x_a.rows() != x_b.rows() || x_a.rows() == 0)
    throw std::invalid_argument("swav_loss_with_targets: bad batch");
  const double n = static_cast<double>(x_a.rows());

  ag::Tape t;
  BoundSwav m = bind(t, params, true);
  ag::Var scores_a = swav_scores(t, m, t.leaf(x_a));
  ag::Var scores_b = swav_scores(t, m, t.leaf(x_b));
  ag::Var lp_a = ag::log_softmax_rows(t, scores_a, params.tau);
  ag::Var lp_b = ag::log_softmax_rows(t, scores_b, params.tau);
  // Objective to maximize: the negated swapped CE.
  ag::Var gain = ag::scalar_mul(
      t,
      ag::add(t, ag::sum(t, ag::mul(t, t.leaf(q_b), lp_a)),
              ag::sum(t, ag::mul(t, t.leaf(q_a), lp_b))),
      0.5 / n);
  t.backward(gain);

  SwavStepResult out;
  out.loss = -t.value(gain)(0, 0);
  auto grab = [&](const BoundMlp& b) {
    for (const auto& [w, bias] : b.layers) {
      out.ascent_grads.push_back(t.grad(w));
      out.ascent_grads.push_back(t.grad(bias));
    }
  };
  grab(m.encoder);
  grab(m.projector);
  out.ascent_grads.push_back(t.grad(m.prototypes));
  return out;
}

SwavStepResult swav_step(const SwavParams& params, const Eigen::MatrixXd& x_a,
                         const Eigen::MatrixXd& x_b, const SinkhornConfig& cfg) {
  // Targets are computed outside any tape: the stop-gradient is structural.
  const Eigen::MatrixXd q_a = sinkhorn_knopp(swav_scores(params, x_a) / params.tau, cfg);
  const Eigen::MatrixXd q_b = sinkhorn_knopp(swav_scores(params, x_b) / params.tau, cfg);
  return swav_loss_with_targets(params, x_a, x_b, q_a, q_b);
}

}  // namespace gedi
