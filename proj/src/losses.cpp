#include "gedi/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "gedi/ebm.hpp"
#include "gedi/exact_sum.hpp"

namespace gedi {

void LossWeights::validate() const {
  if (gen < 0.0 || inv < 0.0 || prior < 0.0)
    throw std::invalid_argument("LossWeights: weights must be non-negative");
}

PriorSpec PriorSpec::uniform(int c) {
  if (c <= 0) throw std::invalid_argument("PriorSpec: need at least one class");
  PriorSpec p;
  p.probs = Eigen::VectorXd::Constant(c, 1.0 / static_cast<double>(c));
  return p;
}

void PriorSpec::validate() const {
  if (probs.size() == 0) throw std::invalid_argument("PriorSpec: empty");
  if ((probs.array() < 0.0).any()) throw std::invalid_argument("PriorSpec: negative entry");
  if (std::abs(probs.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("PriorSpec: probabilities must sum to 1");
}

double cross_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double eps_q) {
  if (p.size() != q.size()) throw std::invalid_argument("cross_entropy: length mismatch");
  double ce = 0.0;
  for (Eigen::Index y = 0; y < p.size(); ++y)
    ce -= p(y) * std::log(std::max(q(y), eps_q));
  return ce;
}

namespace {

// Column means with exact (order-independent) summation; ordinary 1/n
// gradient on the way back.
ag::Var colmean_exact(ag::Tape& t, ag::Var a) {
  const Eigen::MatrixXd& A = t.value(a);
  if (A.rows() == 0) throw std::invalid_argument("colmean_exact: empty batch");
  const double n = static_cast<double>(A.rows());
  Eigen::MatrixXd out(1, A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    ExactSum s;
    for (Eigen::Index i = 0; i < A.rows(); ++i) s.add(A(i, j));
    out(0, j) = s.value() / n;
  }
  return t.emit(std::move(out), t.node(a.id).requires_grad, [a, n](ag::Tape& tp, int self) {
    const Eigen::MatrixXd& g = tp.node(self).grad;  // 1 x c
    tp.grad_buffer(a.id).rowwise() += (g.row(0) / n);
  });
}

ag::Var inv_one_direction(ag::Tape& t, ag::Var target_logits, ag::Var pred_logits, double tau,
                          double n) {
  ag::Var targets = ag::softmax_rows(t, target_logits, tau);
  ag::Var logp = ag::log_softmax_rows(t, pred_logits, tau);
  return ag::scalar_mul(t, ag::sum(t, ag::mul(t, targets, logp)), 1.0 / n);
}

}  // namespace

ag::Var inv_loss(ag::Tape& t, ag::Var logits_clean, ag::Var logits_aug, double tau,
                 bool symmetrize) {
  const Eigen::MatrixXd& tc = t.value(logits_clean);
  const Eigen::MatrixXd& ta = t.value(logits_aug);
  if (tc.rows() != ta.rows() || tc.cols() != ta.cols())
    throw std::invalid_argument("inv_loss: logit shapes disagree");
  if (tc.rows() == 0) throw std::invalid_argument("inv_loss: empty batch");
  const double n = static_cast<double>(tc.rows());
  ag::Var fwd = inv_one_direction(t, logits_aug, logits_clean, tau, n);
  if (!symmetrize) return fwd;
  ag::Var rev = inv_one_direction(t, logits_clean, logits_aug, tau, n);
  return ag::scalar_mul(t, ag::add(t, fwd, rev), 0.5);
}

ag::Var prior_loss(ag::Tape& t, ag::Var logits_clean, double tau, const PriorSpec& prior) {
  prior.validate();
  const Eigen::MatrixXd& tc = t.value(logits_clean);
  if (tc.rows() == 0) throw std::invalid_argument("prior_loss: empty batch");
  if (tc.cols() != prior.probs.size())
    throw std::invalid_argument("prior_loss: class count disagrees with prior");
  ag::Var q = colmean_exact(t, ag::softmax_rows(t, logits_clean, tau));
  ag::Var log_q = ag::log_clamped(t, q, kMarginalFloor);
  ag::Var prior_row = t.leaf(prior.probs.transpose());
  return ag::sum(t, ag::mul(t, prior_row, log_q));
}

GediTerms gedi_objective(ag::Tape& t, const BoundModel& m, ag::Var x,
                         std::optional<ag::Var> x_aug, std::optional<ag::Var> model_x,
                         const LossWeights& weights, const PriorSpec& prior,
                         bool symmetrize_inv) {
  weights.validate();
  if ((weights.inv > 0.0) != x_aug.has_value())
    throw std::invalid_argument("gedi_objective: x_aug must be given iff inv weight > 0");
  if ((weights.gen > 0.0) != model_x.has_value())
    throw std::invalid_argument("gedi_objective: model_x must be given iff gen weight > 0");

  GediTerms terms;
  const bool need_clean_logits = weights.gen > 0.0 || weights.inv > 0.0 || weights.prior > 0.0;
  ag::Var clean_logits{-1};
  if (need_clean_logits) clean_logits = logits(t, m, x);

  auto accumulate = [&](ag::Var term, double w) {
    ag::Var scaled = ag::scalar_mul(t, term, w);
    terms.total = terms.total.id < 0 ? scaled : ag::add(t, terms.total, scaled);
  };

  if (weights.gen > 0.0) {
    ag::Var lsd_data =
        ag::logsumexp_rows(t, ag::scalar_mul(t, clean_logits, 1.0 / m.tau));
    ag::Var lsd_model = log_unnorm_density(t, m, *model_x);
    terms.gen = ag::sub(t, ag::mean(t, lsd_data), ag::mean(t, lsd_model));
    accumulate(terms.gen, weights.gen);
  }
  if (weights.inv > 0.0) {
    ag::Var aug_logits = logits(t, m, *x_aug);
    terms.inv = inv_loss(t, clean_logits, aug_logits, m.tau, symmetrize_inv);
    accumulate(terms.inv, weights.inv);
  }
  if (weights.prior > 0.0) {
    terms.prior = prior_loss(t, clean_logits, m.tau, prior);
    accumulate(terms.prior, weights.prior);
  }
  if (terms.total.id < 0) terms.total = t.leaf(Eigen::MatrixXd::Zero(1, 1));
  return terms;
}

}  // namespace gedi
