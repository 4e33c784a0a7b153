#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fd_check.hpp"
#include "gedi/ebm.hpp"
#include "gedi/metrics.hpp"
#include "gedi/rng.hpp"

using namespace gedi;
using Eigen::MatrixXd;
using Eigen::VectorXi;

namespace {

VectorXi labels(std::initializer_list<int> v) {
  VectorXi out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (int x : v) out(i++) = x;
  return out;
}

// Brute-force NMI straight from the definition, independent of the
// contingency-table implementation.
double nmi_reference(const VectorXi& pred, const VectorXi& truth) {
  const int cp = pred.maxCoeff() + 1, ct = truth.maxCoeff() + 1;
  const double n = static_cast<double>(pred.size());
  std::vector<std::vector<double>> joint(cp, std::vector<double>(ct, 0.0));
  std::vector<double> a(cp, 0.0), b(ct, 0.0);
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    joint[pred(i)][truth(i)] += 1.0 / n;
    a[pred(i)] += 1.0 / n;
    b[truth(i)] += 1.0 / n;
  }
  double hp = 0, ht = 0, mi = 0;
  for (double v : a)
    if (v > 0) hp -= v * std::log(v);
  for (double v : b)
    if (v > 0) ht -= v * std::log(v);
  if (hp == 0 || ht == 0) return 0.0;
  for (int i = 0; i < cp; ++i)
    for (int j = 0; j < ct; ++j)
      if (joint[i][j] > 0) mi += joint[i][j] * std::log(joint[i][j] / (a[i] * b[j]));
  return mi / std::sqrt(hp * ht);
}

}  // namespace

TEST_CASE("nmi is 1 for a perfect labeling and 0 for a constant one") {
  CHECK(nmi(labels({0, 0, 1, 1, 2}), labels({0, 0, 1, 1, 2})) == doctest::Approx(1.0));
  CHECK(nmi(labels({1, 1, 1, 1}), labels({0, 1, 0, 1})) == 0.0);
  CHECK_THROWS_AS((void)nmi(labels({0, 1}), labels({0, 1, 1})), std::invalid_argument);
}

TEST_CASE("nmi on the crossed and the permuted two-class cases") {
  CHECK(nmi(labels({0, 0, 1, 1}), labels({0, 1, 0, 1})) == doctest::Approx(0.0));
  CHECK(nmi(labels({0, 0, 1, 1}), labels({1, 1, 0, 0})) == doctest::Approx(1.0));
}

TEST_CASE("nmi is symmetric, relabeling-invariant and in [0, 1]") {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(30));
    VectorXi a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a(i) = static_cast<int>(rng.below(3));
      b(i) = static_cast<int>(rng.below(4));
    }
    const double v = nmi(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(nmi(b, a) == doctest::Approx(v).epsilon(1e-12));
    CHECK(v == doctest::Approx(nmi_reference(a, b)).epsilon(1e-12));

    // relabel a by the swap 0 <-> 2
    VectorXi a2 = a;
    for (int i = 0; i < n; ++i) a2(i) = a(i) == 0 ? 2 : (a(i) == 2 ? 0 : a(i));
    CHECK(nmi(a2, b) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("arithmetic-mean normalization stays within 0.02 of geometric here") {
  Rng rng(2);
  VectorXi a(100), b(100);
  for (int i = 0; i < 100; ++i) {
    a(i) = static_cast<int>(rng.below(2));
    b(i) = rng.uniform() < 0.85 ? a(i) : 1 - a(i);
  }
  const double g = nmi(a, b, NmiNorm::kGeometric);
  const double m = nmi(a, b, NmiNorm::kArithmetic);
  CHECK(std::abs(g - m) < 0.02);
}

TEST_CASE("representation-collapse detector") {
  MatrixXd same = MatrixXd::Ones(10, 3);
  const CollapseReport r1 = detect_representation_collapse(same, 1e-6);
  CHECK(r1.flagged);
  CHECK(r1.score == 0.0);

  Rng rng(3);
  MatrixXd normal(2000, 3);
  rng.fill_normal(normal);
  const CollapseReport r2 = detect_representation_collapse(normal, 1e-6);
  CHECK_FALSE(r2.flagged);
  CHECK(r2.score == doctest::Approx(1.0).epsilon(0.1));

  MatrixXd two(2, 2);
  two << 0, 0, 1, 1;
  CHECK(detect_representation_collapse(two, 1e-6).score > 0.0);
}

TEST_CASE("representation-collapse detector is threshold-monotone") {
  Rng rng(4);
  MatrixXd e(20, 2);
  rng.fill_normal(e, 0.01);
  const CollapseReport low = detect_representation_collapse(e, 1e-8);
  if (low.flagged) CHECK(detect_representation_collapse(e, 1e-2).flagged);
}

TEST_CASE("cluster-collapse detector") {
  MatrixXd onehot(5, 2);
  for (int i = 0; i < 5; ++i) {
    onehot(i, 0) = 1.0;
    onehot(i, 1) = 0.0;
  }
  const CollapseReport r1 = detect_cluster_collapse(onehot, 0.05);
  CHECK(r1.flagged);
  CHECK(r1.score == doctest::Approx(1.0));

  MatrixXd uniform = MatrixXd::Constant(5, 2, 0.5);
  CHECK_FALSE(detect_cluster_collapse(uniform, 0.05).flagged);

  // 90/10 marginal with eps = 0.05 stays below the 0.95 threshold.
  MatrixXd mixed(10, 2);
  for (int i = 0; i < 10; ++i) {
    mixed(i, 0) = i < 9 ? 1.0 : 0.0;
    mixed(i, 1) = i < 9 ? 0.0 : 1.0;
  }
  const CollapseReport r3 = detect_cluster_collapse(mixed, 0.05);
  CHECK_FALSE(r3.flagged);
  CHECK(r3.score == doctest::Approx(0.9));

  MatrixXd invalid(1, 2);
  invalid << 0.7, 0.7;
  CHECK_THROWS_AS((void)detect_cluster_collapse(invalid, 0.05), std::invalid_argument);
}

TEST_CASE("ood score is zero at a density stationary point") {
  // Constant encoder output makes the density flat in x.
  ModelParams p = init_model(MlpSpec{{2, 3, 2}}, MlpSpec{{2, 4, 2}}, 1.0, 5);
  for (DenseLayer& l : p.encoder.layers) l.weight.setZero();
  Rng rng(6);
  MatrixXd x(4, 2);
  rng.fill_uniform(x, -2.0, 2.0);
  const Eigen::VectorXd s = ood_score(p, x);
  for (int i = 0; i < 4; ++i) CHECK(s(i) == 0.0);
}

TEST_CASE("ood score of a linear energy is minus the weight norm everywhere") {
  // Single class, identity encoder: log p~(x) = w . x.
  ModelParams p;
  p.encoder.layers.push_back({MatrixXd::Identity(2, 2), MatrixXd::Zero(1, 2)});
  MatrixXd w(2, 1);
  w << 0.8, -0.6;
  p.head.layers.push_back({w, MatrixXd::Zero(1, 1)});
  Rng rng(7);
  MatrixXd x(5, 2);
  rng.fill_uniform(x, -3.0, 3.0);
  const Eigen::VectorXd s = ood_score(p, x);
  for (int i = 0; i < 5; ++i) CHECK(s(i) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("ood score matches finite-difference input gradients") {
  ModelParams p = init_model(MlpSpec{{2, 5, 3}}, MlpSpec{{3, 4, 2}}, 1.0, 8);
  Rng rng(9);
  MatrixXd x(6, 2);
  rng.fill_uniform(x, -2.0, 2.0);
  auto eval = [&]() { return log_unnorm_density(p, x).sum(); };
  const MatrixXd numeric = fd::gradient(eval, x);
  const Eigen::VectorXd s = ood_score(p, x);
  for (int i = 0; i < 6; ++i)
    CHECK(s(i) == doctest::Approx(-numeric.row(i).norm()).epsilon(1e-4));
}
