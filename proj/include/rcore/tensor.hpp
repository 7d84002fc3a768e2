#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rcore {

// Dense 64-bit tensor with reverse-mode automatic differentiation.
//
// Tensors are shared handles onto value nodes. Every primitive appends a
// node whose creation order is a topological order of the expression;
// backward() visits reachable nodes exactly once in reverse creation order
// and then releases the tape (parent links and closures), so graph memory
// is bounded by one training step. Leaf tensors (parameters, inputs) keep
// their data and accumulated gradients across steps.
class Tensor {
 public:
  struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // sized lazily, same length as data
    bool requires_grad = false;
    std::uint64_t seq = 0;  // tape position
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward_fn;
  };

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, double fill = 0.0, bool requires_grad = false);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const;  // first dim of a matrix
  std::size_t cols() const;  // second dim of a matrix

  const std::vector<double>& values() const { return node_->data; }
  std::vector<double>& values() { return node_->data; }
  double item() const;  // scalar tensors only

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  std::vector<double>& grad_ref();  // allocates if absent
  void zero_grad();

  bool all_finite() const;
  std::string shape_str() const;

  std::shared_ptr<Node> node_;  // exposed for the op layer

  static Tensor from_node(std::shared_ptr<Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }
};

// ---- primitives -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);

// [m,k]x[k,n] -> [m,n]; [m,k]x[k] -> [m]; [k]x[k,n] -> [n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

Tensor sum(const Tensor& a);        // scalar
Tensor mean_rows(const Tensor& a);  // [T,D] -> [D]

// Softmax over the last axis, max-subtracted for stability.
Tensor softmax(const Tensor& a);

Tensor dot(const Tensor& a, const Tensor& b);     // vectors -> scalar
Tensor cosine(const Tensor& a, const Tensor& b);  // vectors -> scalar in [-1,1]
Tensor cosine_rows(const Tensor& mat, const Tensor& vec);  // [N,D],[D] -> [N]

// 1-D convolution along the first (time) axis with 'same' zero padding.
// seq [T,Din], weight [Dout,w,Din] (w odd), bias [Dout] -> [T,Dout]
Tensor conv1d_time(const Tensor& seq, const Tensor& weight, const Tensor& bias);

Tensor select_rows(const Tensor& a, const std::vector<std::size_t>& idx);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor reverse_time(const Tensor& a);
Tensor permute_time(const Tensor& a, const std::vector<std::size_t>& perm);
Tensor add_rowvec(const Tensor& mat, const Tensor& vec);    // [T,D]+[D] per row
Tensor scale_rows(const Tensor& mat, const Tensor& per_row);  // row i scaled by per_row[i]
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor pick(const Tensor& a, std::size_t flat_index);  // -> scalar

// Runs reverse-mode accumulation from a scalar loss. Gradients of all
// reachable requires_grad tensors accumulate additively; the tape is
// released afterwards.
void backward(const Tensor& loss);

// ---- gradient checking ----------------------------------------------------

struct GradCheckResult {
  bool ok = false;
  bool finite = true;
  double max_discrepancy = 0.0;  // max over coords of |analytic-numeric|/max(1,|analytic|)
  std::size_t worst_index = 0;
};

// Central finite differences of f (scalar-valued) against the analytic
// gradient at x. Non-finite intermediates are reported as failure.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double step, double tol);

}  // namespace rcore
