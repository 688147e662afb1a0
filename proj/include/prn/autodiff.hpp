#pragma once

#include <functional>
#include <span>
#include <vector>

#include "prn/rng.hpp"

namespace prn::ad {

using Vec = std::vector<double>;
using VarId = int;

// Reverse-mode tape over dense double vectors. Operations append nodes in
// topological order; backward() walks the tape once in reverse. Matrices are
// stored row-major inside an ordinary node and given their shape per op.
//
// Parameters register an external gradient sink; flush_grads() accumulates
// into those sinks so one grad buffer can serve many tapes/documents.
class Tape {
 public:
  VarId constant(Vec v);
  VarId scalar(double v);
  // `grad_sink` may be null (parameter whose gradient is discarded).
  VarId param(std::span<const double> v, double* grad_sink);

  const Vec& value(VarId id) const { return nodes_[id].value; }
  const Vec& grad(VarId id) const { return nodes_[id].grad; }
  double scalar_value(VarId id) const { return nodes_[id].value[0]; }
  int size(VarId id) const { return static_cast<int>(nodes_[id].value.size()); }

  // y = W x + b, fused so accumulation order matches the plain forward pass
  // exactly (y[r] starts at b[r]). W is a node of rows*cols entries.
  VarId affine(VarId w, int rows, int cols, VarId x, VarId b);
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId hadamard(VarId a, VarId b);
  VarId scale(VarId a, double k);
  VarId relu(VarId a);
  VarId sigmoid(VarId a);
  VarId dot(VarId a, VarId b);                     // scalar
  VarId concat(const std::vector<VarId>& parts);
  VarId row(VarId mat, int r, int cols);           // row slice of a matrix node
  VarId stack(const std::vector<VarId>& scalars);  // scalars -> vector
  VarId sum(const std::vector<VarId>& scalars);    // scalar total
  VarId softmax(VarId a);
  VarId logsumexp(VarId a);                               // scalar
  VarId logsumexp_subset(VarId a, std::vector<int> idx);  // scalar
  // softplus(s) - label*s, numerically stable; scalar in, scalar out.
  VarId bce_with_logit(VarId s, double label);
  // Weighted combination of k constant rows (row-major xs, k x d).
  VarId weighted_rows(const double* xs, int k, int d, VarId weights);
  // sum_i weights[i] * vecs[i] over variable vectors.
  VarId weighted_sum(VarId weights, const std::vector<VarId>& vecs);
  // Inverted dropout with 0/1 mask drawn from rng; rate 0 is a passthrough.
  VarId dropout(VarId a, double rate, Rng& rng);

  void backward(VarId loss);
  // Accumulates parameter gradients into their sinks.
  void flush_grads();
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Vec value;
    Vec grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  VarId push(Vec value, std::function<void(Tape&)> back);
  Vec& mutable_grad(VarId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<VarId, double*>> params_;
};

}  // namespace prn::ad
