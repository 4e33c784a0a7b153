#include "gedi/autodiff.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gedi::ag {

namespace {

std::atomic<bool> g_finite_checks{true};

void check_finite(const Eigen::MatrixXd& m, const char* op) {
  if (g_finite_checks.load(std::memory_order_relaxed) && !m.allFinite())
    throw std::domain_error(std::string(op) + ": non-finite value");
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled); }
bool finite_checks() { return g_finite_checks.load(); }

Var Tape::leaf(Eigen::MatrixXd value, bool requires_grad) {
  check_finite(value, "leaf");
  nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::emit(Eigen::MatrixXd value, bool requires_grad, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(backward)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Eigen::MatrixXd& Tape::value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }

Eigen::MatrixXd& Tape::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

const Eigen::MatrixXd& Tape::grad(Var v) { return grad_buffer(v.id); }

void Tape::backward(Var root) {
  const Node& r = nodes_[static_cast<std::size_t>(root.id)];
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  // Interior gradients are scratch for this pass; only leaf gradients
  // accumulate across calls.
  for (int i = 0; i <= root.id; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && n.grad.size() != 0) n.grad.setZero();
  }
  grad_buffer(root.id)(0, 0) += 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_)
    if (n.grad.size() != 0) n.grad.setZero();
}

void Tape::reset() { nodes_.clear(); }

namespace {

// Emits an op node with the finite-policing applied to its output.
Var emit_op(Tape& t, const char* op, Eigen::MatrixXd value, bool rg, BackwardFn fn) {
  check_finite(value, op);
  return t.emit(std::move(value), rg, rg ? std::move(fn) : BackwardFn{});
}

bool rg2(const Tape& t, Var a, Var b) {
  return t.node(a.id).requires_grad || t.node(b.id).requires_grad;
}

void accumulate(Tape& t, Var parent, const Eigen::MatrixXd& g) {
  if (t.node(parent.id).requires_grad) t.grad_buffer(parent.id) += g;
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Eigen::MatrixXd& A = t.value(a);
  const Eigen::MatrixXd& B = t.value(b);
  if (A.cols() != B.rows()) throw std::invalid_argument("matmul: inner dimensions disagree");
  Eigen::MatrixXd out(A.rows(), B.cols());
  out.noalias() = A * B;
  return emit_op(t, "matmul", std::move(out), rg2(t, a, b), [a, b](Tape& tp, int self) {
    const Eigen::MatrixXd& g = tp.node(self).grad;
    if (tp.node(a.id).requires_grad) tp.grad_buffer(a.id).noalias() += g * tp.value(b).transpose();
    if (tp.node(b.id).requires_grad) tp.grad_buffer(b.id).noalias() += tp.value(a).transpose() * g;
  });
}

Var add(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "add");
  return emit_op(t, "add", t.value(a) + t.value(b), rg2(t, a, b), [a, b](Tape& tp, int self) {
    const Eigen::MatrixXd& g = tp.node(self).grad;
    accumulate(tp, a, g);
    accumulate(tp, b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "sub");
  return emit_op(t, "sub", t.value(a) - t.value(b), rg2(t, a, b), [a, b](Tape& tp, int self) {
    const Eigen::MatrixXd& g = tp.node(self).grad;
    accumulate(tp, a, g);
    if (tp.node(b.id).requires_grad) tp.grad_buffer(b.id) -= g;
  });
}

Var mul(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "mul");
  return emit_op(t, "mul", t.value(a).cwiseProduct(t.value(b)), rg2(t, a, b),
                 [a, b](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   if (tp.node(a.id).requires_grad)
                     tp.grad_buffer(a.id) += g.cwiseProduct(tp.value(b));
                   if (tp.node(b.id).requires_grad)
                     tp.grad_buffer(b.id) += g.cwiseProduct(tp.value(a));
                 });
}

Var scalar_mul(Tape& t, Var a, double s) {
  return emit_op(t, "scalar_mul", s * t.value(a), t.node(a.id).requires_grad,
                 [a, s](Tape& tp, int self) {
                   accumulate(tp, a, s * tp.node(self).grad);
                 });
}

Var add_rowvec(Tape& t, Var a, Var row) {
  const Eigen::MatrixXd& A = t.value(a);
  const Eigen::MatrixXd& r = t.value(row);
  if (r.rows() != 1 || r.cols() != A.cols())
    throw std::invalid_argument("add_rowvec: row must be 1 x cols(a)");
  Eigen::MatrixXd out = A.rowwise() + r.row(0);
  return emit_op(t, "add_rowvec", std::move(out), rg2(t, a, row), [a, row](Tape& tp, int self) {
    const Eigen::MatrixXd& g = tp.node(self).grad;
    accumulate(tp, a, g);
    if (tp.node(row.id).requires_grad) tp.grad_buffer(row.id) += g.colwise().sum();
  });
}

Var relu(Tape& t, Var a) {
  return emit_op(t, "relu", t.value(a).cwiseMax(0.0), t.node(a.id).requires_grad,
                 [a](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   const Eigen::MatrixXd& x = tp.value(a);
                   tp.grad_buffer(a.id) += (x.array() > 0.0).select(g, 0.0);
                 });
}

Var leaky_relu(Tape& t, Var a, double slope) {
  const Eigen::MatrixXd& x = t.value(a);
  Eigen::MatrixXd out = (x.array() > 0.0).select(x, slope * x);
  return emit_op(t, "leaky_relu", std::move(out), t.node(a.id).requires_grad,
                 [a, slope](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   const Eigen::MatrixXd& x = tp.value(a);
                   tp.grad_buffer(a.id) +=
                       (x.array() > 0.0).select(g, Eigen::MatrixXd(slope * g));
                 });
}

Var log(Tape& t, Var a) {
  return emit_op(t, "log", t.value(a).array().log().matrix(), t.node(a.id).requires_grad,
                 [a](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   tp.grad_buffer(a.id).array() += g.array() / tp.value(a).array();
                 });
}

Var exp(Tape& t, Var a) {
  return emit_op(t, "exp", t.value(a).array().exp().matrix(), t.node(a.id).requires_grad,
                 [a](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   tp.grad_buffer(a.id) += g.cwiseProduct(tp.node(self).value);
                 });
}

Var log_clamped(Tape& t, Var a, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("log_clamped: floor must be positive");
  return emit_op(t, "log_clamped", t.value(a).cwiseMax(floor).array().log().matrix(),
                 t.node(a.id).requires_grad, [a, floor](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   const Eigen::MatrixXd& x = tp.value(a);
                   tp.grad_buffer(a.id).array() +=
                       (x.array() > floor).select(g.array() / x.array(), 0.0);
                 });
}

Var sum(Tape& t, Var a) {
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = t.value(a).sum();
  return emit_op(t, "sum", std::move(out), t.node(a.id).requires_grad, [a](Tape& tp, int self) {
    tp.grad_buffer(a.id).array() += tp.node(self).grad(0, 0);
  });
}

Var mean(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  if (n == 0) throw std::invalid_argument("mean: empty input");
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = t.value(a).sum() / n;
  return emit_op(t, "mean", std::move(out), t.node(a.id).requires_grad,
                 [a, n](Tape& tp, int self) {
                   tp.grad_buffer(a.id).array() += tp.node(self).grad(0, 0) / n;
                 });
}

Var gather_row(Tape& t, Var a, Eigen::Index i) {
  const Eigen::MatrixXd& A = t.value(a);
  if (i < 0 || i >= A.rows()) throw std::invalid_argument("gather_row: row index out of range");
  return emit_op(t, "gather_row", A.row(i), t.node(a.id).requires_grad,
                 [a, i](Tape& tp, int self) {
                   tp.grad_buffer(a.id).row(i) += tp.node(self).grad.row(0);
                 });
}

Var concat_rows(Tape& t, Var a, Var b) {
  const Eigen::MatrixXd& A = t.value(a);
  const Eigen::MatrixXd& B = t.value(b);
  if (A.cols() != B.cols()) throw std::invalid_argument("concat_rows: column counts disagree");
  Eigen::MatrixXd out(A.rows() + B.rows(), A.cols());
  out.topRows(A.rows()) = A;
  out.bottomRows(B.rows()) = B;
  return emit_op(t, "concat_rows", std::move(out), rg2(t, a, b), [a, b](Tape& tp, int self) {
    const Eigen::MatrixXd& g = tp.node(self).grad;
    const Eigen::Index na = tp.value(a).rows();
    const Eigen::Index nb = tp.value(b).rows();
    if (tp.node(a.id).requires_grad) tp.grad_buffer(a.id) += g.topRows(na);
    if (tp.node(b.id).requires_grad) tp.grad_buffer(b.id) += g.bottomRows(nb);
  });
}

Var logsumexp_rows(Tape& t, Var a) {
  const Eigen::MatrixXd& A = t.value(a);
  if (A.cols() < 1) throw std::invalid_argument("logsumexp_rows: needs at least one column");
  Eigen::VectorXd m = A.rowwise().maxCoeff();
  Eigen::MatrixXd out(A.rows(), 1);
  out.col(0) = (m.array() + (A.colwise() - m).array().exp().rowwise().sum().log()).matrix();
  return emit_op(t, "logsumexp_rows", std::move(out), t.node(a.id).requires_grad,
                 [a](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;  // n x 1
                   const Eigen::MatrixXd& A = tp.value(a);
                   const Eigen::MatrixXd& out = tp.node(self).value;
                   // exp(a_ij - lse_i) is exactly the row softmax
                   Eigen::MatrixXd soft = (A.colwise() - out.col(0)).array().exp();
                   tp.grad_buffer(a.id) += (soft.array().colwise() * g.col(0).array()).matrix();
                 });
}

namespace {

Eigen::MatrixXd softmax_value(const Eigen::MatrixXd& A, double tau) {
  Eigen::MatrixXd s = A / tau;
  Eigen::VectorXd m = s.rowwise().maxCoeff();
  Eigen::MatrixXd e = (s.colwise() - m).array().exp();
  Eigen::VectorXd z = e.rowwise().sum();
  return (e.array().colwise() / z.array()).matrix();
}

}  // namespace

Var softmax_rows(Tape& t, Var a, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_rows: tau must be positive");
  const Eigen::MatrixXd& A = t.value(a);
  if (A.cols() < 1) throw std::invalid_argument("softmax_rows: needs at least one column");
  return emit_op(t, "softmax_rows", softmax_value(A, tau), t.node(a.id).requires_grad,
                 [a, tau](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   const Eigen::MatrixXd& y = tp.node(self).value;
                   Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                   tp.grad_buffer(a.id) +=
                       ((y.array() * (g.colwise() - dot).array()) / tau).matrix();
                 });
}

Var log_softmax_rows(Tape& t, Var a, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("log_softmax_rows: tau must be positive");
  const Eigen::MatrixXd& A = t.value(a);
  if (A.cols() < 1) throw std::invalid_argument("log_softmax_rows: needs at least one column");
  Eigen::MatrixXd s = A / tau;
  Eigen::VectorXd m = s.rowwise().maxCoeff();
  Eigen::VectorXd lse =
      (m.array() + (s.colwise() - m).array().exp().rowwise().sum().log()).matrix();
  Eigen::MatrixXd out = s.colwise() - lse;
  return emit_op(t, "log_softmax_rows", std::move(out), t.node(a.id).requires_grad,
                 [a, tau](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   Eigen::MatrixXd y = tp.node(self).value.array().exp();
                   Eigen::VectorXd rowsum = g.rowwise().sum();
                   tp.grad_buffer(a.id) +=
                       (g - Eigen::MatrixXd(y.array().colwise() * rowsum.array())) / tau;
                 });
}

Var l2_normalize_rows(Tape& t, Var a) {
  const Eigen::MatrixXd& A = t.value(a);
  Eigen::VectorXd r = A.rowwise().norm();
  if ((r.array() == 0.0).any())
    throw std::domain_error("l2_normalize_rows: zero-norm row");
  Eigen::MatrixXd out = (A.array().colwise() / r.array()).matrix();
  return emit_op(t, "l2_normalize_rows", std::move(out), t.node(a.id).requires_grad,
                 [a](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   const Eigen::MatrixXd& y = tp.node(self).value;
                   Eigen::VectorXd r = tp.value(a).rowwise().norm();
                   Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                   Eigen::MatrixXd proj = g - Eigen::MatrixXd(y.array().colwise() * dot.array());
                   tp.grad_buffer(a.id) += (proj.array().colwise() / r.array()).matrix();
                 });
}

Var standardize_cols(Tape& t, Var a, double eps) {
  const Eigen::MatrixXd& A = t.value(a);
  if (A.rows() < 1) throw std::invalid_argument("standardize_cols: empty batch");
  const double n = static_cast<double>(A.rows());
  Eigen::RowVectorXd mu = A.colwise().mean();
  Eigen::MatrixXd centered = A.rowwise() - mu;
  Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
  Eigen::RowVectorXd s = (var.array() + eps).sqrt();
  Eigen::MatrixXd out = (centered.array().rowwise() / s.array()).matrix();
  return emit_op(t, "standardize_cols", std::move(out), t.node(a.id).requires_grad,
                 [a, eps, n](Tape& tp, int self) {
                   const Eigen::MatrixXd& g = tp.node(self).grad;
                   const Eigen::MatrixXd& y = tp.node(self).value;
                   const Eigen::MatrixXd& A = tp.value(a);
                   Eigen::RowVectorXd mu = A.colwise().mean();
                   Eigen::RowVectorXd var =
                       (A.rowwise() - mu).array().square().colwise().sum() / n;
                   Eigen::RowVectorXd s = (var.array() + eps).sqrt();
                   Eigen::RowVectorXd gmean = g.colwise().mean();
                   Eigen::RowVectorXd gymean = g.cwiseProduct(y).colwise().mean();
                   Eigen::MatrixXd dx =
                       (((g.rowwise() - gmean) -
                         Eigen::MatrixXd(y.array().rowwise() * gymean.array()))
                            .array()
                            .rowwise() /
                        s.array())
                           .matrix();
                   tp.grad_buffer(a.id) += dx;
                 });
}

}  // namespace gedi::ag
