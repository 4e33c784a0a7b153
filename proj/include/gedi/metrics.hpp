#pragma once

#include <Eigen/Dense>

#include "gedi/nets.hpp"

// Clustering quality and failure-mode diagnostics.
namespace gedi {

struct ContingencyTable {
  Eigen::MatrixXd counts;  // c_pred x c_true
  long total = 0;

  static ContingencyTable from_labels(const Eigen::VectorXi& pred, const Eigen::VectorXi& truth);
};

enum class NmiNorm { kGeometric, kArithmetic };

// I(pred; true) normalized by the chosen mean of the marginal entropies,
// natural logs. Returns 0 when either clustering is constant.
double nmi(const Eigen::VectorXi& pred, const Eigen::VectorXi& truth,
           NmiNorm norm = NmiNorm::kGeometric);

struct CollapseReport {
  bool flagged = false;
  double score = 0.0;
};

// Representational collapse: mean per-dimension variance of embeddings below
// eps.
CollapseReport detect_representation_collapse(const Eigen::MatrixXd& embeddings,
                                              double eps = 1e-6);

// Cluster collapse: some class owns more than 1 - eps of the batch marginal.
// Rows of probs must be distributions.
CollapseReport detect_cluster_collapse(const Eigen::MatrixXd& probs, double eps = 0.05);

// OOD score s(x) = -|| d log p~(x) / dx ||_2 per sample.
Eigen::VectorXd ood_score(const ModelParams& params, const Eigen::MatrixXd& x);

}  // namespace gedi
