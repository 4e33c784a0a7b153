#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

// Tape-based reverse-mode automatic differentiation over dense double
// matrices. The tape is rebuilt per forward pass; scalars are 1x1 matrices.
//
// Error conventions:
//   std::invalid_argument - shape or parameter violations
//   std::domain_error     - non-finite values at an op boundary (when policing
//                           is enabled, see set_finite_checks)
namespace gedi::ag {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid for the tape that
// created it.
struct Var {
  int id = -1;
};

using BackwardFn = std::function<void(Tape&, int self)>;

struct Node {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  BackwardFn backward;  // empty for leaves
  };

class Tape {
 public:
  // Records an input node. Gradients are accumulated only into nodes created
  // with requires_grad = true (and interior nodes derived from them).
  Var leaf(Eigen::MatrixXd value, bool requires_grad = false);

  // Records an op result. Used by the op free functions below.
  Var emit(Eigen::MatrixXd value, bool requires_grad, BackwardFn backward);

  const Eigen::MatrixXd& value(Var v) const;

  // Gradient buffer of v, zero until a backward pass touches it.
  const Eigen::MatrixXd& grad(Var v);

  // Propagates d(root)/d(node) into every grad buffer reachable from root.
  // root must be scalar (1x1). Repeated calls accumulate unless zero_grad()
  // is called in between.
  void backward(Var root);

  void zero_grad();

  // Drops all nodes; handles from before the call become invalid.
  void reset();

  std::size_t size() const { return nodes_.size(); }

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  // Accumulation target for backward rules; allocates zeros on first use.
  Eigen::MatrixXd& grad_buffer(int id);

 private:
  std::vector<Node> nodes_;
};

// Policing of NaN/Inf at op boundaries. On by default; turning it off skips
// the per-op scans (release-mode behaviour). Shape checks are always on.
void set_finite_checks(bool enabled);
bool finite_checks();

// --- primitive ops ---------------------------------------------------------

// [m x k] * [k x p] -> [m x p]
Var matmul(Tape& t, Var a, Var b);

// Same-shape elementwise.
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);

Var scalar_mul(Tape& t, Var a, double s);

// [n x k] + [1 x k], row-broadcast (bias addition).
Var add_rowvec(Tape& t, Var a, Var row);

Var relu(Tape& t, Var a);
Var leaky_relu(Tape& t, Var a, double slope);

// Natural log / exp, elementwise.
Var log(Tape& t, Var a);
Var exp(Tape& t, Var a);

// ln(max(a, floor)) elementwise; zero gradient on the clamped side.
Var log_clamped(Tape& t, Var a, double floor);

// Full reductions to 1x1.
Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);

// Row i of a as a 1 x k matrix.
Var gather_row(Tape& t, Var a, Eigen::Index i);

// Vertical stack; column counts must agree.
Var concat_rows(Tape& t, Var a, Var b);

// Per-row ln sum_j exp(a_ij), max-shifted; [n x c] -> [n x 1]. Requires c >= 1.
Var logsumexp_rows(Tape& t, Var a);

// Rows of softmax(a / tau); requires tau > 0.
Var softmax_rows(Tape& t, Var a, double tau);

// Rows of a/tau - logsumexp(a/tau); stable log of softmax_rows.
Var log_softmax_rows(Tape& t, Var a, double tau);

// Rows scaled to unit L2 norm; errors on a zero-norm row.
Var l2_normalize_rows(Tape& t, Var a);

// Per-column standardization over the batch: (x - mean) / sqrt(var + eps),
// biased variance. Batch-norm style backward through the statistics.
Var standardize_cols(Tape& t, Var a, double eps = 1e-5);

}  // namespace gedi::ag
