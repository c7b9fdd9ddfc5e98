#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "inbet/tensor.hpp"

namespace inbet::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation over a recorded sequence of matrix operations.
// Nodes are appended in execution order; backward() walks them in reverse.
// A node only records a backward closure when one of its inputs requires a
// gradient, so inference on constant parameters costs a forward pass only.
class Tape {
 public:
  Var constant(Mat value);
  Var parameter(Mat value);

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  // Zero matrix of the node's shape when no gradient reached it.
  Mat grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 for a 1x1 node and propagates to every input.
  void backward(Var out);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // a (m x n) + row (1 x n) broadcast over rows
  Var add_row(Var a, Var row);
  Var scale(Var a, double s);
  // elementwise mul * a + add
  Var affine(Var a, double mul, double add);
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var transpose(Var a);

  Var relu(Var a);
  Var sigmoid(Var a);
  Var log(Var a);
  Var exp(Var a);
  Var abs(Var a);
  Var clamp(Var a, double lo, double hi);
  Var row_softmax(Var a);

  // Output row r is the concatenation of `blocks` input rows
  // index[r * blocks + b]; index -1 contributes a zero block.
  Var gather_blocks(Var a, std::vector<int> index, int blocks);
  Var gather_rows(Var a, std::vector<int> index) { return gather_blocks(a, std::move(index), 1); }
  // Row r multiplied by the constant factor[r].
  Var scale_rows(Var a, std::vector<double> factor);
  // n x 1 column of a(i, j) for each pair
  Var gather_elements(Var a, std::vector<std::pair<int, int>> at);

  Var sum(Var a);
  Var mean(Var a);

  // Log-domain Sinkhorn on scores (m x n) augmented with a dustbin row and
  // column holding the scalar `alpha` (1 x 1). Row marginals (1,..,1,n),
  // column marginals (1,..,1,m). Returns the (m+1) x (n+1) log transport plan.
  Var log_sinkhorn(Var scores, Var alpha, int iters);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(Mat value, bool requires_grad, std::function<void()> backward);
  bool any_requires(std::initializer_list<Var> vs) const;
  Mat& grad_ref(int id);

  std::vector<Node> nodes_;
};

}  // namespace inbet::ad
