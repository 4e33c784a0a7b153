#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "gedi/rng.hpp"

// Synthetic 2-D benchmark datasets and the stochastic augmentation.
namespace gedi {

struct GeneratorSpec {
  std::string name;          // "moons" | "circles"
  int n = 400;
  double noise_std = 0.05;   // isotropic Gaussian on the generated points
  double radius_ratio = 0.5; // circles only
  std::uint64_t seed = 0;
};

struct LabeledDataset {
  Eigen::MatrixXd points;  // n x d
  Eigen::VectorXi labels;  // in [0, c)
  GeneratorSpec spec;
};

struct AugmentationSpec {
  double noise_std = 0.03;
};

// Per-instance logit triples (x_i, t_i, t_i') used by the permutation tests.
struct LogitDataset {
  Eigen::MatrixXd x;           // n x d
  Eigen::MatrixXd logits;      // n x c, t_i
  Eigen::MatrixXd logits_aug;  // n x c, t_i'
};

// Two interleaving half-circles: class 0 on the unit upper semicircle, class 1
// on the lower semicircle shifted to (1, 0.5). n/2 points per class.
LabeledDataset make_moons(int n, double noise_std, std::uint64_t seed);

// Concentric circles of radius 1 and radius_ratio, uniform angles.
LabeledDataset make_circles(int n, double radius_ratio, double noise_std, std::uint64_t seed);

LabeledDataset make_dataset(const GeneratorSpec& spec);

// x + noise_std * eps with fresh standard-normal noise per call.
Eigen::MatrixXd augment(const Eigen::MatrixXd& x, const AugmentationSpec& spec, Rng& rng);

// Definition-3 construction: permutes the clean logits t by pi, leaving x and
// the augmented logits untouched. pi must be a bijection on {0..n-1}.
LogitDataset permute_dataset(const LogitDataset& ds, const std::vector<int>& pi);

// CSV rows "x1,x2,label" with a header; locale-independent formatting.
void write_dataset_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace gedi
