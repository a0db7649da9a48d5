#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dgu/matrix.hpp"
#include "dgu/param_store.hpp"

namespace dgu {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid until the tape is cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_{nullptr};
  int id_{-1};
};

// Parameters bound as differentiable leaves of one tape.
struct BoundParams {
  const ParamStore* store{nullptr};
  std::vector<Var> vars;

  Var operator[](std::size_t i) const { return vars[i]; }
  Var at(const std::string& name) const {
    return vars[store->index_of(name)];
  }
};

// Records one forward pass as a sequence of primitive operations. Nodes are
// appended in evaluation order, so walking them backwards is a reverse
// topological traversal and visits every node exactly once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-differentiable input.
  Var constant(Matrix value);
  // Differentiable leaf.
  Var leaf(Matrix value);

  BoundParams bind(const ParamStore& params);

  // Per-parameter gradients of a scalar loss, aligned with the bound store.
  // Parameters the loss never touched get zero matrices. A tape records one
  // forward pass and supports one backward call.
  std::vector<Matrix> backward(Var loss, const BoundParams& params);

  // Gradient of the last backward() w.r.t. an arbitrary node (zero matrix if
  // the loss did not depend on it).
  Matrix grad_of(Var v) const;

  void clear();
  std::size_t node_count() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  // Shapes of every recorded node value; used by the allocation audit.
  std::vector<std::pair<std::size_t, std::size_t>> node_shapes() const;

  // Low-level hooks for the primitive implementations.
  Var emit(Matrix value, bool requires_grad,
           std::function<void(Tape&, const Matrix&)> backward);
  void accumulate(int id, const Matrix& g);
  bool requires_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }
  const Matrix& value_of(int id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
  }

 private:
  friend class Var;

  struct Node {
    Matrix value;
    // Propagates the node's output gradient into its parents' accumulators.
    std::function<void(Tape&, const Matrix&)> backward;
    bool requires_grad{false};
  };

  const Matrix& grad(int id) const;
  bool has_grad(int id) const;

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::vector<bool> grad_set_;
  bool backward_done_{false};
};

// ---- Forward primitives -------------------------------------------------
// Every primitive validates shapes, records itself on the tape of its
// operands and is deterministic.

Var add(Var a, Var b);
Var sub(Var a, Var b);
// y = a * c for a compile-time-constant scalar c.
Var scale(Var a, double c);
Var matmul(Var a, Var b);
// y = x * w + bias, bias is 1 x cols broadcast over rows.
Var linear(Var x, Var w, Var bias);
// tanh-approximation GeLU, applied elementwise.
Var gelu(Var a);
Var sigmoid(Var a);
// Row-wise layer norm over columns with learned per-column affine.
Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-5);
Var concat_cols(Var a, Var b);
// Column means: R x C -> 1 x C.
Var mean_rows(Var a);
Var sum_all(Var a);
Var mean_all(Var a);
// Elementwise |x| (subgradient 0 at 0).
Var abs_val(Var a);
// Elementwise integer power, k >= 1.
Var pow_int(Var a, int k);
// y_ij = a_ij - s for a scalar node s (1x1).
Var sub_scalar(Var a, Var s);
// Stacks 1x1 nodes into an N x 1 column.
Var stack_scalars(Tape& tape, const std::vector<Var>& xs);
// First n row-major entries of m as 1 x n.
Var flatten_head(Var m, std::size_t n);
// rows x cols window of a 1 x n vector starting at offset.
Var slice_reshape(Var flat, std::size_t offset, std::size_t rows,
                  std::size_t cols);
// Mean binary cross-entropy from logits, computed in the stable log-sum-exp
// form. Labels must lie in [0, 1].
Var bce_with_logits(Var logits, const std::vector<double>& labels);

// Scalar kernel shared by the taped op and plain evaluation paths.
double bce_logit_scalar(double logit, double label);
double bce_with_logits(std::span<const double> logits,
                       std::span<const double> labels);
double gelu_scalar(double x);

}  // namespace dgu
