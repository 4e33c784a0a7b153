#include "gedi/ebm.hpp"

#include <stdexcept>
#include <vector>

namespace gedi {

void SgldConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("SgldConfig: steps must be >= 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("SgldConfig: step_size must be > 0");
  if (noise_std < 0.0) throw std::invalid_argument("SgldConfig: noise_std must be >= 0");
  if (reinit_prob < 0.0 || reinit_prob > 1.0)
    throw std::invalid_argument("SgldConfig: reinit_prob must be in [0, 1]");
  if (init_low.size() != init_high.size())
    throw std::invalid_argument("SgldConfig: init bounds dimension mismatch");
  for (Eigen::Index i = 0; i < init_low.size(); ++i)
    if (!(init_low(i) <= init_high(i)))
      throw std::invalid_argument("SgldConfig: init_low must not exceed init_high");
}

ReplayBuffer::ReplayBuffer(int capacity, const Eigen::VectorXd& init_low,
                           const Eigen::VectorXd& init_high, std::uint64_t seed)
    : rng_(seed) {
  if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  if (init_low.size() != init_high.size() || init_low.size() == 0)
    throw std::invalid_argument("ReplayBuffer: bad init bounds");
  entries_.resize(capacity, init_low.size());
  for (Eigen::Index i = 0; i < entries_.rows(); ++i)
    for (Eigen::Index j = 0; j < entries_.cols(); ++j)
      entries_(i, j) = rng_.uniform(init_low(j), init_high(j));
}

ag::Var log_unnorm_density(ag::Tape& t, const BoundModel& m, ag::Var x) {
  return ag::logsumexp_rows(t, ag::scalar_mul(t, logits(t, m, x), 1.0 / m.tau));
}

Eigen::VectorXd log_unnorm_density(const ModelParams& params, const Eigen::MatrixXd& x) {
  ag::Tape t;
  BoundModel m = bind(t, params, false);
  return t.value(log_unnorm_density(t, m, t.leaf(x))).col(0);
}

Eigen::MatrixXd input_score(const ModelParams& params, const Eigen::MatrixXd& x) {
  ag::Tape t;
  BoundModel m = bind(t, params, false);
  ag::Var vx = t.leaf(x, true);
  // Rows are independent, so the gradient of the row sum splits per sample.
  t.backward(ag::sum(t, log_unnorm_density(t, m, vx)));
  return t.grad(vx);
}

ScoreFn model_score_fn(const ModelParams& params) {
  return [&params](const Eigen::MatrixXd& x) { return input_score(params, x); };
}

Eigen::MatrixXd sgld_sample(const ScoreFn& score, ReplayBuffer& buffer, const SgldConfig& cfg,
                            int m) {
  cfg.validate();
  if (m <= 0) throw std::invalid_argument("sgld_sample: m must be positive");
  if (m > buffer.capacity())
    throw std::invalid_argument("sgld_sample: m exceeds buffer capacity");
  if (cfg.init_low.size() != buffer.dim())
    throw std::invalid_argument("sgld_sample: init bounds do not match buffer dimension");
  Rng& rng = buffer.rng();

  // Partial Fisher-Yates: m distinct slots, uniform without replacement.
  std::vector<int> idx(static_cast<std::size_t>(buffer.capacity()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(buffer.capacity() - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }

  const Eigen::Index d = buffer.dim();
  Eigen::MatrixXd x(m, d);
  for (int i = 0; i < m; ++i) {
    if (rng.uniform() < cfg.reinit_prob) {
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform(cfg.init_low(j), cfg.init_high(j));
    } else {
      x.row(i) = buffer.entries().row(idx[static_cast<std::size_t>(i)]);
    }
  }

  Eigen::VectorXd clamp_low, clamp_high;
  if (cfg.clamp_to_box) {
    const Eigen::VectorXd mid = 0.5 * (cfg.init_low + cfg.init_high);
    const Eigen::VectorXd half = 0.5 * (cfg.init_high - cfg.init_low) * cfg.clamp_factor;
    clamp_low = mid - half;
    clamp_high = mid + half;
  }

  for (int step = 0; step < cfg.steps; ++step) {
    const Eigen::MatrixXd g = score(x);
    for (int i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        x(i, j) += cfg.step_size * g(i, j) + cfg.noise_std * rng.normal();
    if (cfg.clamp_to_box)
      for (int i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          x(i, j) = std::min(std::max(x(i, j), clamp_low(j)), clamp_high(j));
  }

  for (int i = 0; i < m; ++i) buffer.entries().row(idx[static_cast<std::size_t>(i)]) = x.row(i);
  return x;
}

Eigen::MatrixXd sgld_sample(const ModelParams& params, ReplayBuffer& buffer,
                            const SgldConfig& cfg, int m) {
  return sgld_sample(model_score_fn(params), buffer, cfg, m);
}

GenLossGrad gen_loss_grad(const ModelParams& params, const Eigen::MatrixXd& data_x,
                          const Eigen::MatrixXd& model_x) {
  if (data_x.rows() == 0 || model_x.rows() == 0)
    throw std::invalid_argument("gen_loss_grad: empty batch");
  ag::Tape t;
  BoundModel m = bind(t, params, true);
  ag::Var data_term = ag::mean(t, log_unnorm_density(t, m, t.leaf(data_x)));
  ag::Var model_term = ag::mean(t, log_unnorm_density(t, m, t.leaf(model_x)));
  ag::Var diff = ag::sub(t, data_term, model_term);
  t.backward(diff);

  GenLossGrad out;
  out.diagnostic = t.value(diff)(0, 0);
  auto grab = [&](const BoundMlp& b) {
    for (const auto& [w, bias] : b.layers) {
      out.grads.push_back(t.grad(w));
      out.grads.push_back(t.grad(bias));
    }
  };
  grab(m.encoder);
  grab(m.head);
  return out;
}

void data_box(const Eigen::MatrixXd& points, double margin, Eigen::VectorXd& low,
              Eigen::VectorXd& high) {
  low = points.colwise().minCoeff();
  high = points.colwise().maxCoeff();
  const Eigen::VectorXd span = high - low;
  low -= margin * span;
  high += margin * span;
}

}  // namespace gedi
