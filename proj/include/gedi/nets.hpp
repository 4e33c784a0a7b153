#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "gedi/autodiff.hpp"

// Backbone networks: encoder MLP + discriminative head for the main model,
// encoder + projector + prototype matrix for the SwAV-style baseline.
namespace gedi {

enum class Activation { kRelu, kLeakyRelu };

struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::MatrixXd bias;    // 1 x out
};

struct Mlp {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kRelu;
  double leaky_slope = 0.2;
  // Per-feature batch standardization after every linear layer (the SwAV
  // nets use batch norm in all layers; this is the stand-in).
  bool standardize_layers = false;

  Eigen::Index in_dim() const { return layers.front().weight.rows(); }
  Eigen::Index out_dim() const { return layers.back().weight.cols(); }
};

struct MlpSpec {
  std::vector<int> dims;  // e.g. {2, 100, 100, 2}
  Activation activation = Activation::kRelu;
  double leaky_slope = 0.2;
  bool standardize_layers = false;
};

// Encoder + head + temperature; the full parameter set the trainer updates.
struct ModelParams {
  Mlp encoder;
  Mlp head;
  double tau = 1.0;

  std::vector<Eigen::MatrixXd*> matrices();
  std::vector<const Eigen::MatrixXd*> matrices() const;
};

// SwAV-style baseline: unit-sphere projector output scored against unit
// prototype columns.
struct SwavParams {
  Mlp encoder;
  Mlp projector;
  Eigen::MatrixXd prototypes;  // h x c, columns kept at unit norm
  double tau = 0.1;

  std::vector<Eigen::MatrixXd*> matrices();
  std::vector<const Eigen::MatrixXd*> matrices() const;

  void normalize_prototypes();
};

// Kaiming-style uniform fan-in init, biases zero; deterministic given seed.
Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed);
ModelParams init_model(const MlpSpec& encoder, const MlpSpec& head, double tau,
                       std::uint64_t seed);
SwavParams init_swav(const MlpSpec& encoder, const MlpSpec& projector, int clusters,
                     double tau, std::uint64_t seed);

// --- tape-bound forward passes ----------------------------------------------

struct BoundMlp {
  std::vector<std::pair<ag::Var, ag::Var>> layers;  // (weight, bias)
  Activation activation = Activation::kRelu;
  double leaky_slope = 0.2;
  bool standardize_layers = false;
};

struct BoundModel {
  BoundMlp encoder;
  BoundMlp head;
  double tau = 1.0;
};

struct BoundSwav {
  BoundMlp encoder;
  BoundMlp projector;
  ag::Var prototypes;
  double tau = 0.1;
};

BoundMlp bind(ag::Tape& t, const Mlp& mlp, bool requires_grad);
BoundModel bind(ag::Tape& t, const ModelParams& params, bool requires_grad);
BoundSwav bind(ag::Tape& t, const SwavParams& params, bool requires_grad);

ag::Var forward(ag::Tape& t, const BoundMlp& mlp, ag::Var x);

// Latent representation enc(x): [n x d] -> [n x h].
ag::Var encode(ag::Tape& t, const BoundModel& m, ag::Var x);

// Head-of-encoder logits f(enc(x)): [n x d] -> [n x c]. Not divided by tau;
// the temperature is applied at softmax / energy sites.
ag::Var logits(ag::Tape& t, const BoundModel& m, ag::Var x);

// Unit-norm projector embedding g(x): [n x d] -> [n x h].
ag::Var swav_embed(ag::Tape& t, const BoundSwav& m, ag::Var x);

// Cosine similarities against prototype columns: [n x d] -> [n x c] in [-1, 1].
ag::Var swav_scores(ag::Tape& t, const BoundSwav& m, ag::Var x);

// --- plain (gradient-free) evaluation ---------------------------------------

Eigen::MatrixXd encode(const ModelParams& params, const Eigen::MatrixXd& x);
Eigen::MatrixXd logits(const ModelParams& params, const Eigen::MatrixXd& x);
Eigen::MatrixXd swav_scores(const SwavParams& params, const Eigen::MatrixXd& x);

// Row-wise argmax (lowest index wins ties); the predicted cluster labels.
Eigen::VectorXi argmax_rows(const Eigen::MatrixXd& scores);

}  // namespace gedi
