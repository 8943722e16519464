#pragma once

#include <functional>
#include <vector>

#include "vmreg/tensor.hpp"

namespace vmreg {

/// Define-by-run reverse-mode tape over Tensor-valued nodes. A Graph is built
/// per batch, consumed by one backward() call, and dropped; nothing persists
/// between batches. Creation order is the topological order, so backward just
/// walks the nodes in reverse.
class Graph {
 public:
  using Var = int;

  /// Leaf holding a copy of `t`; receives no gradient.
  Var input(Tensor t);

  /// Leaf bound to external parameter storage. The value is copied in at
  /// creation; backward() accumulates into *grad.
  Var param(const Tensor* value, Tensor* grad);

  // x:(n,in), w:(out,in), b:(1,out) -> (n,out); y = x w^T + b.
  Var affine(Var x, Var w, Var b);

  Var relu(Var x);
  Var tanh_act(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var mul_colvec(Var a, Var col);  // (n,k) scaled per-row by (n,1)
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }
  Var exp_elem(Var a);
  Var square(Var a);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int start, int len);

  /// Rows projected to unit norm (hypot for 2 columns, matching normalize2).
  /// Throws DegenerateVector when a row norm is at or below kNormEps.
  Var normalize_rows(Var a);

  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);

  /// Concentration link: kKappaMax * tanh(softplus(x) / kKappaMax). Smooth,
  /// strictly increasing, range (0, kKappaMax).
  Var softplus_kappa(Var a);

  Var clamp(Var a, double lo, double hi);
  Var log_bessel_i0_elem(Var a);  // requires nonnegative entries

  Var rowwise_dot(Var a, Var b);  // (n,k) x (n,k) -> (n,1)
  Var rowwise_sum(Var a);         // (n,k) -> (n,1)
  Var logsumexp_rows(Var a);      // (n,k) -> (n,1)
  Var mean_all(Var a);            // -> (1,1)
  Var sum_all(Var a);             // -> (1,1)

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }
  double scalar(Var v) const;

  /// Backpropagates from a (1,1) root, accumulating into bound param grads.
  void backward(Var root);

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Graph&, Node&)> back;  // null for inputs
    Tensor* bound_grad = nullptr;
  };

  Var push(Tensor val, std::function<void(Graph&, Node&)> back);
  Tensor& grad_of(Var v) { return nodes_[static_cast<std::size_t>(v)].grad; }
  const Tensor& val_of(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }

  std::vector<Node> nodes_;
};

}  // namespace vmreg
