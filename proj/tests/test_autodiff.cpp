#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fd_check.hpp"
#include "gedi/autodiff.hpp"
#include "gedi/rng.hpp"

using namespace gedi;
using namespace gedi::ag;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -2.0,
                       double hi = 2.0) {
  MatrixXd m(r, c);
  rng.fill_uniform(m, lo, hi);
  return m;
}

// Random inputs kept away from activation kinks so finite differences are
// valid at h = 1e-5.
MatrixXd random_matrix_nonzero(Rng& rng, Eigen::Index r, Eigen::Index c) {
  MatrixXd m = random_matrix(rng, r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i)
      while (std::abs(m(i, j)) < 1e-3) m(i, j) = rng.uniform(-2.0, 2.0);
  return m;
}

// Checks d(sum(op(x) .* weight))/dx against central differences. The random
// weight matrix makes the gradient entry-dependent.
void check_unary_op(const std::function<Var(Tape&, Var)>& op, MatrixXd x, Rng& rng,
                    double tol = 1e-4) {
  Tape probe;
  MatrixXd w = random_matrix(rng, probe.value(op(probe, probe.leaf(x))).rows(),
                             probe.value(op(probe, probe.leaf(x))).cols());
  std::function<double()> eval = [&]() {
    Tape t;
    Var v = op(t, t.leaf(x, true));
    return t.value(sum(t, mul(t, v, t.leaf(w))))(0, 0);
  };
  Tape t;
  Var leaf_x = t.leaf(x, true);
  t.backward(sum(t, mul(t, op(t, leaf_x), t.leaf(w))));
  MatrixXd analytic = t.grad(leaf_x);
  MatrixXd numeric = fd::gradient(eval, x);
  CHECK(fd::rel_error(analytic, numeric) < tol);
}

}  // namespace

TEST_CASE("matmul identity and projector cases") {
  Tape t;
  MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  Var out = matmul(t, t.leaf(MatrixXd::Identity(2, 2)), t.leaf(m));
  CHECK(t.value(out).isApprox(m));

  MatrixXd p(2, 2), v(2, 1);
  p << 1, 0, 0, 0;
  v << 5, 7;
  Var out2 = matmul(t, t.leaf(p), t.leaf(v));
  CHECK(t.value(out2)(0, 0) == 5.0);
  CHECK(t.value(out2)(1, 0) == 0.0);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tape t;
  Var a = t.leaf(MatrixXd::Zero(3, 4));
  Var b = t.leaf(MatrixXd::Zero(3, 2));
  CHECK_THROWS_AS((void)matmul(t, a, b), std::invalid_argument);
}

TEST_CASE("matmul gradient matches finite differences to 1e-6") {
  Rng rng(11);
  MatrixXd a = random_matrix(rng, 3, 4);
  MatrixXd b = random_matrix(rng, 4, 2);
  MatrixXd w = random_matrix(rng, 3, 2);
  auto eval = [&]() {
    Tape t;
    Var c = matmul(t, t.leaf(a, true), t.leaf(b, true));
    return t.value(sum(t, mul(t, c, t.leaf(w))))(0, 0);
  };
  Tape t;
  Var la = t.leaf(a, true), lb = t.leaf(b, true);
  t.backward(sum(t, mul(t, matmul(t, la, lb), t.leaf(w))));
  CHECK(fd::rel_error(t.grad(la), fd::gradient(eval, a)) < 1e-6);
  CHECK(fd::rel_error(t.grad(lb), fd::gradient(eval, b)) < 1e-6);
}

TEST_CASE("logsumexp_rows analytic values") {
  Tape t;
  MatrixXd x(2, 2);
  x << 0, 0, 1000, 1000;
  Var out = logsumexp_rows(t, t.leaf(x));
  CHECK(t.value(out)(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(t.value(out)(1, 0) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));

  Var empty = t.leaf(MatrixXd(1, 0));
  CHECK_THROWS_AS((void)logsumexp_rows(t, empty), std::invalid_argument);
}

TEST_CASE("logsumexp_rows value and gradient match brute-force scalar oracle") {
  Tape t;
  MatrixXd x(1, 3);
  x << 1, 2, 3;
  Var leaf_x = t.leaf(x, true);
  Var out = logsumexp_rows(t, leaf_x);
  const double direct = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(t.value(out)(0, 0) == doctest::Approx(direct).epsilon(1e-12));

  t.backward(sum(t, out));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int j = 0; j < 3; ++j)
    CHECK(t.grad(leaf_x)(0, j) == doctest::Approx(std::exp(1.0 + j) / z).epsilon(1e-12));
}

TEST_CASE("logsumexp_rows bracketed by row max and row max plus ln c") {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const int c = 1 + static_cast<int>(rng.below(6));
    MatrixXd x = random_matrix(rng, 5, c);
    Tape t;
    const MatrixXd lse = t.value(logsumexp_rows(t, t.leaf(x)));
    for (int i = 0; i < 5; ++i) {
      const double mx = x.row(i).maxCoeff();
      CHECK(lse(i, 0) >= mx);
      CHECK(lse(i, 0) <= mx + std::log(static_cast<double>(c)) + 1e-12);
    }
  }
}

TEST_CASE("softmax_rows analytic values") {
  Tape t;
  MatrixXd x(2, 2);
  x << 0, 0, std::log(2.0), 0;
  Var out = softmax_rows(t, t.leaf(x), 1.0);
  CHECK(t.value(out)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.value(out)(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.value(out)(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(t.value(out)(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax_rows respects the temperature") {
  Tape t;
  MatrixXd x(1, 2);
  x << 1, 0;
  Var out = softmax_rows(t, t.leaf(x), 0.5);
  const double e2 = std::exp(2.0);
  CHECK(t.value(out)(0, 0) == doctest::Approx(e2 / (e2 + 1.0)).epsilon(1e-12));
  CHECK(t.value(out)(0, 1) == doctest::Approx(1.0 / (e2 + 1.0)).epsilon(1e-12));
}

TEST_CASE("softmax_rows rejects non-positive tau") {
  Tape t;
  Var x = t.leaf(MatrixXd::Zero(1, 2));
  CHECK_THROWS_AS((void)softmax_rows(t, x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)softmax_rows(t, x, -1.0), std::invalid_argument);
}

TEST_CASE("softmax_rows rows are strictly positive distributions") {
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    MatrixXd x = random_matrix(rng, 4, 3, -30.0, 30.0);
    Tape t;
    const MatrixXd y = t.value(softmax_rows(t, t.leaf(x), 1.0));
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(y.row(i).sum() - 1.0) < 1e-12);
      CHECK(y.row(i).minCoeff() > 0.0);
    }
  }
}

TEST_CASE("backward on sum gives all-ones gradient") {
  Tape t;
  Var w = t.leaf(MatrixXd::Constant(3, 2, 0.7), true);
  t.backward(sum(t, w));
  CHECK(t.grad(w).isApprox(MatrixXd::Ones(3, 2)));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape t;
  Var w = t.leaf(MatrixXd::Zero(2, 2), true);
  CHECK_THROWS_AS(t.backward(w), std::invalid_argument);
}

TEST_CASE("disconnected leaf keeps a zero gradient") {
  Tape t;
  Var w = t.leaf(MatrixXd::Ones(2, 2), true);
  Var other = t.leaf(MatrixXd::Ones(2, 2), true);
  t.backward(sum(t, w));
  CHECK(t.grad(other).isZero(0.0));
}

TEST_CASE("repeated backward accumulates; zero_grad resets deterministically") {
  Tape t;
  Rng rng(5);
  MatrixXd x = random_matrix(rng, 2, 3);
  Var w = t.leaf(x, true);
  Var root = mean(t, mul(t, w, w));
  t.backward(root);
  const MatrixXd g1 = t.grad(w);
  t.backward(root);
  CHECK(t.grad(w).isApprox(2.0 * g1));
  t.zero_grad();
  t.backward(root);
  CHECK(t.grad(w) == g1);  // bit-identical on the same tape
}

TEST_CASE("elementwise and reduction ops match finite differences") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    MatrixXd x = random_matrix(rng, 3, 4);
    MatrixXd y = random_matrix(rng, 3, 4);

    check_unary_op([&](Tape& t, Var v) { return add(t, v, t.leaf(y)); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return sub(t, t.leaf(y), v); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return mul(t, v, t.leaf(y)); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return scalar_mul(t, v, -1.7); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return exp(t, v); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return mean(t, v); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return sum(t, v); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return gather_row(t, v, 1); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return concat_rows(t, v, t.leaf(y)); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return logsumexp_rows(t, v); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return softmax_rows(t, v, 0.7); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return log_softmax_rows(t, v, 1.3); }, x, rng);
    check_unary_op([&](Tape& t, Var v) { return standardize_cols(t, v); }, x, rng);

    MatrixXd pos = random_matrix(rng, 3, 4, 0.1, 2.2);
    check_unary_op([&](Tape& t, Var v) { return ag::log(t, v); }, pos, rng);
    check_unary_op([&](Tape& t, Var v) { return log_clamped(t, v, 1e-12); }, pos, rng);

    MatrixXd nz = random_matrix_nonzero(rng, 3, 4);
    check_unary_op([&](Tape& t, Var v) { return relu(t, v); }, nz, rng);
    check_unary_op([&](Tape& t, Var v) { return leaky_relu(t, v, 0.2); }, nz, rng);
    check_unary_op([&](Tape& t, Var v) { return l2_normalize_rows(t, v); }, nz, rng);

    MatrixXd row = random_matrix(rng, 1, 4);
    check_unary_op([&](Tape& t, Var v) { return add_rowvec(t, v, t.leaf(row)); }, x, rng);
  }
}

TEST_CASE("add_rowvec bias gradient matches finite differences") {
  Rng rng(37);
  MatrixXd x = random_matrix(rng, 5, 3);
  MatrixXd b = random_matrix(rng, 1, 3);
  MatrixXd w = random_matrix(rng, 5, 3);
  auto eval = [&]() {
    Tape t;
    Var out = add_rowvec(t, t.leaf(x), t.leaf(b, true));
    return t.value(sum(t, mul(t, out, t.leaf(w))))(0, 0);
  };
  Tape t;
  Var lb = t.leaf(b, true);
  t.backward(sum(t, mul(t, add_rowvec(t, t.leaf(x), lb), t.leaf(w))));
  CHECK(fd::rel_error(t.grad(lb), fd::gradient(eval, b)) < 1e-4);
}

TEST_CASE("log_clamped floors the value and zeroes the clamped gradient") {
  Tape t;
  MatrixXd x(1, 2);
  x << 0.5, 1e-20;
  Var lx = t.leaf(x, true);
  Var out = log_clamped(t, lx, 1e-12);
  CHECK(t.value(out)(0, 0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(t.value(out)(0, 1) == doctest::Approx(std::log(1e-12)).epsilon(1e-12));
  t.backward(sum(t, out));
  CHECK(t.grad(lx)(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.grad(lx)(0, 1) == 0.0);
}

TEST_CASE("l2_normalize_rows rejects zero rows and yields unit rows") {
  Tape t;
  Rng rng(41);
  MatrixXd x = random_matrix_nonzero(rng, 4, 3);
  const MatrixXd y = t.value(l2_normalize_rows(t, t.leaf(x)));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(y.row(i).norm() - 1.0) < 1e-9);

  Var zero_row = t.leaf(MatrixXd::Zero(1, 3));
  CHECK_THROWS_AS((void)l2_normalize_rows(t, zero_row), std::domain_error);
}

TEST_CASE("standardize_cols output has zero column means and near-unit variance") {
  Rng rng(43);
  MatrixXd x = random_matrix(rng, 40, 3);
  Tape t;
  const MatrixXd y = t.value(standardize_cols(t, t.leaf(x)));
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(y.col(j).mean()) < 1e-12);
    const double var = y.col(j).array().square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("finite policing rejects NaN when enabled and can be disabled") {
  Tape t;
  MatrixXd bad(1, 1);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)t.leaf(bad), std::domain_error);

  set_finite_checks(false);
  CHECK_NOTHROW((void)t.leaf(bad));
  set_finite_checks(true);

  Var neg = t.leaf(MatrixXd::Constant(1, 1, -1.0));
  CHECK_THROWS_AS((void)ag::log(t, neg), std::domain_error);
}

TEST_CASE("composite MLP-shaped chain matches finite differences") {
  Rng rng(47);
  MatrixXd x = random_matrix(rng, 6, 2);
  MatrixXd w1 = random_matrix(rng, 2, 5);
  MatrixXd b1 = random_matrix(rng, 1, 5);
  MatrixXd w2 = random_matrix(rng, 5, 3);
  auto loss = [&](Tape& t, Var vw1, Var vb1, Var vw2) {
    Var h = relu(t, add_rowvec(t, matmul(t, t.leaf(x), vw1), vb1));
    Var logits = matmul(t, h, vw2);
    return mean(t, logsumexp_rows(t, logits));
  };
  auto eval = [&]() {
    Tape t;
    return t.value(loss(t, t.leaf(w1, true), t.leaf(b1, true), t.leaf(w2, true)))(0, 0);
  };
  Tape t;
  Var vw1 = t.leaf(w1, true), vb1 = t.leaf(b1, true), vw2 = t.leaf(w2, true);
  t.backward(loss(t, vw1, vb1, vw2));
  CHECK(fd::rel_error(t.grad(vw1), fd::gradient(eval, w1)) < 1e-4);
  CHECK(fd::rel_error(t.grad(vb1), fd::gradient(eval, b1)) < 1e-4);
  CHECK(fd::rel_error(t.grad(vw2), fd::gradient(eval, w2)) < 1e-4);
}
