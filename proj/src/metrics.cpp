#include "gedi/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "gedi/ebm.hpp"

namespace gedi {

ContingencyTable ContingencyTable::from_labels(const Eigen::VectorXi& pred,
                                               const Eigen::VectorXi& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("ContingencyTable: label vectors differ in length");
  if (pred.size() == 0) throw std::invalid_argument("ContingencyTable: empty labels");
  if (pred.minCoeff() < 0 || truth.minCoeff() < 0)
    throw std::invalid_argument("ContingencyTable: negative label");
  ContingencyTable ct;
  ct.counts = Eigen::MatrixXd::Zero(pred.maxCoeff() + 1, truth.maxCoeff() + 1);
  for (Eigen::Index i = 0; i < pred.size(); ++i) ct.counts(pred(i), truth(i)) += 1.0;
  ct.total = pred.size();
  return ct;
}

double nmi(const Eigen::VectorXi& pred, const Eigen::VectorXi& truth, NmiNorm norm) {
  const ContingencyTable ct = ContingencyTable::from_labels(pred, truth);
  const double n = static_cast<double>(ct.total);
  const Eigen::VectorXd row = ct.counts.rowwise().sum();
  const Eigen::VectorXd col = ct.counts.colwise().sum();

  double h_pred = 0.0, h_true = 0.0, mi = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i)
    if (row(i) > 0.0) h_pred -= row(i) / n * std::log(row(i) / n);
  for (Eigen::Index j = 0; j < col.size(); ++j)
    if (col(j) > 0.0) h_true -= col(j) / n * std::log(col(j) / n);
  if (h_pred == 0.0 || h_true == 0.0) return 0.0;  // constant clustering convention

  for (Eigen::Index i = 0; i < row.size(); ++i)
    for (Eigen::Index j = 0; j < col.size(); ++j) {
      const double c = ct.counts(i, j);
      if (c > 0.0) mi += c / n * std::log(c * n / (row(i) * col(j)));
    }
  const double denom = norm == NmiNorm::kGeometric ? std::sqrt(h_pred * h_true)
                                                   : 0.5 * (h_pred + h_true);
  double value = mi / denom;
  if (value < 0.0) value = 0.0;  // fp guard; MI is non-negative
  if (value > 1.0) value = 1.0;
  return value;
}

CollapseReport detect_representation_collapse(const Eigen::MatrixXd& embeddings, double eps) {
  if (embeddings.rows() < 2)
    throw std::invalid_argument("detect_representation_collapse: need at least two rows");
  const Eigen::RowVectorXd mu = embeddings.colwise().mean();
  const double score =
      (embeddings.rowwise() - mu).array().square().colwise().sum().mean() /
      static_cast<double>(embeddings.rows());
  return CollapseReport{score < eps, score};
}

CollapseReport detect_cluster_collapse(const Eigen::MatrixXd& probs, double eps) {
  if (probs.rows() == 0 || probs.cols() == 0)
    throw std::invalid_argument("detect_cluster_collapse: empty input");
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs.row(i).minCoeff() < -1e-12 || std::abs(probs.row(i).sum() - 1.0) > 1e-6)
      throw std::invalid_argument("detect_cluster_collapse: rows must be distributions");
  }
  const double top = probs.colwise().mean().maxCoeff();
  return CollapseReport{top > 1.0 - eps, top};
}

Eigen::VectorXd ood_score(const ModelParams& params, const Eigen::MatrixXd& x) {
  return -input_score(params, x).rowwise().norm();
}

}  // namespace gedi
