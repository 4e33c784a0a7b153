#include "gedi/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace gedi {

AdamState AdamState::create(const AdamConfig& cfg, const std::vector<Eigen::MatrixXd*>& params) {
  AdamState s;
  s.cfg = cfg;
  for (const Eigen::MatrixXd* p : params) {
    s.m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    s.v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(AdamState& state, const std::vector<Eigen::MatrixXd*>& params,
               const std::vector<Eigen::MatrixXd>& ascent_grads) {
  if (params.size() != ascent_grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  state.step += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd& p = *params[i];
    const Eigen::MatrixXd& g = ascent_grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g.cwiseProduct(g);
    p.array() += state.cfg.lr * (state.m[i].array() / corr1) /
                 ((state.v[i].array() / corr2).sqrt() + state.cfg.eps);
  }
}

void adam_step_descend(AdamState& state, const std::vector<Eigen::MatrixXd*>& params,
                       const std::vector<Eigen::MatrixXd>& descent_grads) {
  std::vector<Eigen::MatrixXd> neg;
  neg.reserve(descent_grads.size());
  for (const Eigen::MatrixXd& g : descent_grads) neg.push_back(-g);
  adam_step(state, params, neg);
}

}  // namespace gedi
