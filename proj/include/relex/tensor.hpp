#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "relex/rng.hpp"

namespace relex {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

// One node of the reverse-mode graph. Nodes are created in topological order
// (parents before children) so sorting by id gives a valid backward order.
struct Node {
  uint64_t id = 0;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until the backward pass touches the node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Dense 64-bit tensor handle participating in a reverse-mode autodiff graph.
// Copying a Tensor copies the handle, not the buffer. Gradients accumulate
// additively when a tensor feeds multiple consumers.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng,
                        bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  uint64_t id() const { return node_->id; }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values_mut() { return node_->value; }  // in-place parameter update
  double value_at(std::size_t i) const { return node_->value[i]; }
  double scalar_value() const;

  // Zeros if the last backward pass never reached this tensor.
  std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Elementwise and linear-algebra primitives. All are differentiable; shape
// mismatches are rejected with a dimension error.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor scale_by(const Tensor& s, const Tensor& a);  // scalar s times a
Tensor matmul(const Tensor& a, const Tensor& b);    // [m,k] x [k,n]
Tensor matvec(const Tensor& a, const Tensor& x);    // [m,k] x [k] -> [m]
Tensor dot(const Tensor& x, const Tensor& y);       // -> scalar
Tensor add_rowwise(const Tensor& m, const Tensor& v);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor softmax(const Tensor& x);  // 1-D, max-subtraction stabilized
Tensor cross_entropy(const Tensor& logits, std::size_t gold);
Tensor sum(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts);   // 1-D concatenation
Tensor hconcat(const std::vector<Tensor>& parts);  // 2-D, along columns
Tensor element(const Tensor& x, std::size_t i);    // -> scalar
Tensor row(const Tensor& x, std::size_t i);        // 2-D -> 1-D row slice
Tensor linear_combination(const std::vector<Tensor>& vs, const Tensor& w);
Tensor embedding_rows(const Tensor& table, const std::vector<std::size_t>& ids);

// input [n x d_in], kernel [k x d_in x d_out] with odd k, bias [d_out];
// symmetric zero padding of (k-1)/2 keeps the output length at n.
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

Tensor max_pool_columns(const Tensor& h);  // [n x m] -> [m]

// Columnwise maxima over [0..a], [a+1..b], [b+1..n-1], concatenated to [3m].
// An empty segment contributes zeros and receives no gradient. Gradient is
// routed to the lowest index among tied maxima.
Tensor piecewise_max_pool(const Tensor& h, std::size_t split_a, std::size_t split_b);

// Inverted dropout; identity when training is false or rate is 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training);

// Reverse-mode pass from a scalar loss. Every requires_grad tensor reachable
// from the loss receives a gradient of its own shape.
void backward(const Tensor& loss);

// Max over all parameter elements of |analytic - numeric| / max(|a|, |n|, 1e-8)
// using central differences. f must rebuild its graph from the current
// parameter values on each call and be deterministic; non-determinism and
// non-scalar outputs are rejected.
double finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                         double eps = 1e-6);

bool all_finite(const Tensor& t);

}  // namespace relex
