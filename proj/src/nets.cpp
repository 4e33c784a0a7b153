#include "gedi/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "gedi/rng.hpp"

namespace gedi {

namespace {

void collect(std::vector<Eigen::MatrixXd*>& out, Mlp& mlp) {
  for (DenseLayer& l : mlp.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
}

void collect_const(std::vector<const Eigen::MatrixXd*>& out, const Mlp& mlp) {
  for (const DenseLayer& l : mlp.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
}

}  // namespace

std::vector<Eigen::MatrixXd*> ModelParams::matrices() {
  std::vector<Eigen::MatrixXd*> out;
  collect(out, encoder);
  collect(out, head);
  return out;
}

std::vector<const Eigen::MatrixXd*> ModelParams::matrices() const {
  std::vector<const Eigen::MatrixXd*> out;
  collect_const(out, encoder);
  collect_const(out, head);
  return out;
}

std::vector<Eigen::MatrixXd*> SwavParams::matrices() {
  std::vector<Eigen::MatrixXd*> out;
  collect(out, encoder);
  collect(out, projector);
  out.push_back(&prototypes);
  return out;
}

std::vector<const Eigen::MatrixXd*> SwavParams::matrices() const {
  std::vector<const Eigen::MatrixXd*> out;
  collect_const(out, encoder);
  collect_const(out, projector);
  out.push_back(&prototypes);
  return out;
}

void SwavParams::normalize_prototypes() {
  for (Eigen::Index j = 0; j < prototypes.cols(); ++j) {
    const double n = prototypes.col(j).norm();
    if (n == 0.0) throw std::domain_error("normalize_prototypes: zero-norm column");
    prototypes.col(j) /= n;
  }
}

Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  if (spec.dims.size() < 2) throw std::invalid_argument("init_mlp: need at least two dims");
  for (int d : spec.dims)
    if (d <= 0) throw std::invalid_argument("init_mlp: zero-dimension layer");
  Rng rng(seed);
  Mlp mlp;
  mlp.activation = spec.activation;
  mlp.leaky_slope = spec.leaky_slope;
  mlp.standardize_layers = spec.standardize_layers;
  for (std::size_t i = 0; i + 1 < spec.dims.size(); ++i) {
    const int fan_in = spec.dims[i];
    const int fan_out = spec.dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    DenseLayer layer;
    layer.weight.resize(fan_in, fan_out);
    rng.fill_uniform(layer.weight, -bound, bound);
    layer.bias = Eigen::MatrixXd::Zero(1, fan_out);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

ModelParams init_model(const MlpSpec& encoder, const MlpSpec& head, double tau,
                       std::uint64_t seed) {
  if (!(tau > 0.0)) throw std::invalid_argument("init_model: tau must be positive");
  if (encoder.dims.back() != head.dims.front())
    throw std::invalid_argument("init_model: encoder output dim != head input dim");
  ModelParams p;
  p.encoder = init_mlp(encoder, derive_seed(seed, 0));
  p.head = init_mlp(head, derive_seed(seed, 1));
  p.tau = tau;
  return p;
}

SwavParams init_swav(const MlpSpec& encoder, const MlpSpec& projector, int clusters,
                     double tau, std::uint64_t seed) {
  if (!(tau > 0.0)) throw std::invalid_argument("init_swav: tau must be positive");
  if (clusters <= 0) throw std::invalid_argument("init_swav: clusters must be positive");
  if (encoder.dims.back() != projector.dims.front())
    throw std::invalid_argument("init_swav: encoder output dim != projector input dim");
  SwavParams p;
  p.encoder = init_mlp(encoder, derive_seed(seed, 0));
  p.projector = init_mlp(projector, derive_seed(seed, 1));
  p.tau = tau;
  Rng rng(derive_seed(seed, 2));
  p.prototypes.resize(projector.dims.back(), clusters);
  rng.fill_normal(p.prototypes);
  p.normalize_prototypes();
  return p;
}

BoundMlp bind(ag::Tape& t, const Mlp& mlp, bool requires_grad) {
  BoundMlp b;
  b.activation = mlp.activation;
  b.leaky_slope = mlp.leaky_slope;
  b.standardize_layers = mlp.standardize_layers;
  for (const DenseLayer& l : mlp.layers)
    b.layers.emplace_back(t.leaf(l.weight, requires_grad), t.leaf(l.bias, requires_grad));
  return b;
}

BoundModel bind(ag::Tape& t, const ModelParams& params, bool requires_grad) {
  return BoundModel{bind(t, params.encoder, requires_grad), bind(t, params.head, requires_grad),
                    params.tau};
}

BoundSwav bind(ag::Tape& t, const SwavParams& params, bool requires_grad) {
  return BoundSwav{bind(t, params.encoder, requires_grad),
                   bind(t, params.projector, requires_grad),
                   t.leaf(params.prototypes, requires_grad), params.tau};
}

ag::Var forward(ag::Tape& t, const BoundMlp& mlp, ag::Var x) {
  ag::Var h = x;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    h = ag::add_rowvec(t, ag::matmul(t, h, mlp.layers[i].first), mlp.layers[i].second);
    if (mlp.standardize_layers) h = ag::standardize_cols(t, h);
    if (i + 1 == mlp.layers.size()) break;
    h = mlp.activation == Activation::kRelu ? ag::relu(t, h)
                                            : ag::leaky_relu(t, h, mlp.leaky_slope);
  }
  return h;
}

ag::Var encode(ag::Tape& t, const BoundModel& m, ag::Var x) { return forward(t, m.encoder, x); }

ag::Var logits(ag::Tape& t, const BoundModel& m, ag::Var x) {
  return forward(t, m.head, encode(t, m, x));
}

ag::Var swav_embed(ag::Tape& t, const BoundSwav& m, ag::Var x) {
  return ag::l2_normalize_rows(t, forward(t, m.projector, forward(t, m.encoder, x)));
}

ag::Var swav_scores(ag::Tape& t, const BoundSwav& m, ag::Var x) {
  return ag::matmul(t, swav_embed(t, m, x), m.prototypes);
}

Eigen::MatrixXd encode(const ModelParams& params, const Eigen::MatrixXd& x) {
  ag::Tape t;
  BoundModel m = bind(t, params, false);
  return t.value(encode(t, m, t.leaf(x)));
}

Eigen::MatrixXd logits(const ModelParams& params, const Eigen::MatrixXd& x) {
  ag::Tape t;
  BoundModel m = bind(t, params, false);
  return t.value(logits(t, m, t.leaf(x)));
}

Eigen::MatrixXd swav_scores(const SwavParams& params, const Eigen::MatrixXd& x) {
  ag::Tape t;
  BoundSwav m = bind(t, params, false);
  return t.value(swav_scores(t, m, t.leaf(x)));
}

Eigen::VectorXi argmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::VectorXi labels(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    labels(i) = static_cast<int>(best);
  }
  return labels;
}

}  // namespace gedi
