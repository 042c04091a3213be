#include "relex/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "relex/errors.hpp"
#include "relex/kernels.hpp"

namespace relex {

namespace {

std::atomic<uint64_t> g_next_id{1};

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                  bool leaf_requires_grad = false) {
  auto n = std::make_shared<Node>();
  n->id = g_next_id.fetch_add(1);
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->requires_grad = leaf_requires_grad;
  for (const auto& p : n->parents) {
    if (p->requires_grad) n->requires_grad = true;
  }
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw_data(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
               shape_str(b.shape()));
  }
}

void check_rank(const Tensor& t, std::size_t r, const char* op) {
  if (t.rank() != r) {
    throw_data(std::string(op) + ": expected rank " + std::to_string(r) + ", got " +
               shape_str(t.shape()));
  }
}

bool wants_grad(const NodePtr& p) { return p->requires_grad; }

}  // namespace

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw_data("Tensor::from: shape " + shape_str(shape) + " does not hold " +
               std::to_string(values.size()) + " values");
  }
  return Tensor(make_node(std::move(shape), std::move(values), {}, requires_grad));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(shape_size(shape), 0.0);
  return Tensor(make_node(std::move(shape), std::move(v), {}, requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(shape_size(shape), value);
  return Tensor(make_node(std::move(shape), std::move(v), {}, requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_node({1}, {value}, {}, requires_grad));
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(make_node(std::move(shape), std::move(v), {}, requires_grad));
}

double Tensor::scalar_value() const {
  if (size() != 1) throw_data("scalar_value: tensor has " + std::to_string(size()) + " elements");
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(node_->value.size(), 0.0);
  return node_->grad;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  auto n = make_node(a.shape(), std::move(v), {a.node(), b.node()});
  n->backward_fn = [](Node& self) {
    for (int side = 0; side < 2; ++side) {
      auto& p = self.parents[side];
      if (!wants_grad(p)) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  auto n = make_node(a.shape(), std::move(v), {a.node(), b.node()});
  n->backward_fn = [](Node& self) {
    if (wants_grad(self.parents[0])) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self.parents[1])) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  auto n = make_node(a.shape(), std::move(v), {a.node(), b.node()});
  n->backward_fn = [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants_grad(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (wants_grad(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  };
  return Tensor(n);
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * c;
  auto n = make_node(a.shape(), std::move(v), {a.node()});
  n->backward_fn = [c](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
  };
  return Tensor(n);
}

Tensor scale_by(const Tensor& s, const Tensor& a) {
  if (s.size() != 1) throw_data("scale_by: scale factor must be a scalar");
  const double c = s.values()[0];
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * c;
  auto n = make_node(a.shape(), std::move(v), {s.node(), a.node()});
  n->backward_fn = [](Node& self) {
    auto& ps = self.parents[0];
    auto& pa = self.parents[1];
    const double c = ps->value[0];
    if (wants_grad(ps)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * pa->value[i];
      ps->ensure_grad()[0] += acc;
    }
    if (wants_grad(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
    }
  };
  return Tensor(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw_data("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
               shape_str(b.shape()));
  }
  std::vector<double> v(m * n);
  kernels::matmul(a.values().data(), b.values().data(), v.data(), m, k, n);
  auto node = make_node({m, n}, std::move(v), {a.node(), b.node()});
  node->backward_fn = [m, k, n](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants_grad(pa)) {
      kernels::matmul(self.grad.data(), pb->value.data(), pa->ensure_grad().data(), m, n, k,
                      false, true, true);
    }
    if (wants_grad(pb)) {
      kernels::matmul(pa->value.data(), self.grad.data(), pb->ensure_grad().data(), k, m, n,
                      true, false, true);
    }
  };
  return Tensor(node);
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  check_rank(a, 2, "matvec");
  check_rank(x, 1, "matvec");
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  if (x.shape()[0] != k) {
    throw_data("matvec: matrix " + shape_str(a.shape()) + " does not fit vector " +
               shape_str(x.shape()));
  }
  std::vector<double> v(m);
  kernels::matmul(a.values().data(), x.values().data(), v.data(), m, k, 1);
  auto node = make_node({m}, std::move(v), {a.node(), x.node()});
  node->backward_fn = [m, k](Node& self) {
    auto& pa = self.parents[0];
    auto& px = self.parents[1];
    if (wants_grad(pa)) {
      kernels::matmul(self.grad.data(), px->value.data(), pa->ensure_grad().data(), m, 1, k,
                      false, false, true);
    }
    if (wants_grad(px)) {
      kernels::matmul(pa->value.data(), self.grad.data(), px->ensure_grad().data(), k, m, 1,
                      true, false, true);
    }
  };
  return Tensor(node);
}

Tensor dot(const Tensor& x, const Tensor& y) {
  check_rank(x, 1, "dot");
  check_same_shape(x, y, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x.values()[i] * y.values()[i];
  auto n = make_node({1}, {acc}, {x.node(), y.node()});
  n->backward_fn = [](Node& self) {
    const double g0 = self.grad[0];
    auto& px = self.parents[0];
    auto& py = self.parents[1];
    if (wants_grad(px)) {
      auto& g = px->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * py->value[i];
    }
    if (wants_grad(py)) {
      auto& g = py->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * px->value[i];
    }
  };
  return Tensor(n);
}

Tensor add_rowwise(const Tensor& m, const Tensor& v) {
  check_rank(m, 2, "add_rowwise");
  check_rank(v, 1, "add_rowwise");
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  if (v.shape()[0] != cols) {
    throw_data("add_rowwise: row vector " + shape_str(v.shape()) + " does not match " +
               shape_str(m.shape()));
  }
  std::vector<double> out(m.values());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += v.values()[j];
  }
  auto n = make_node(m.shape(), std::move(out), {m.node(), v.node()});
  n->backward_fn = [rows, cols](Node& self) {
    auto& pm = self.parents[0];
    auto& pv = self.parents[1];
    if (wants_grad(pm)) {
      auto& g = pm->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(pv)) {
      auto& g = pv->ensure_grad();
      for (std::size_t j = 0; j < cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rows; ++i) acc += self.grad[i * cols + j];
        g[j] += acc;
      }
    }
  };
  return Tensor(n);
}

Tensor tanh(const Tensor& x) {
  std::vector<double> v(x.size());
  kernels::tanh_map(x.values().data(), v.data(), x.size());
  auto n = make_node(x.shape(), std::move(v), {x.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * (1.0 - y * y);
    }
  };
  return Tensor(n);
}

Tensor relu(const Tensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x.values()[i] > 0.0 ? x.values()[i] : 0.0;
  auto n = make_node(x.shape(), std::move(v), {x.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (p->value[i] > 0.0) g[i] += self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor softmax(const Tensor& x) {
  check_rank(x, 1, "softmax");
  if (x.size() == 0) throw_data("softmax: empty vector");
  const auto& in = x.values();
  double mx = in[0];
  for (double v : in) mx = std::max(mx, v);
  std::vector<double> v(in.size());
  double z = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    // floor keeps outputs strictly positive when exp underflows; the shift
    // guarantees z >= 1, so the floor perturbs sums below any tolerance
    v[i] = std::max(std::exp(in[i] - mx), std::numeric_limits<double>::min());
    z += v[i];
  }
  for (double& e : v) e /= z;
  auto n = make_node(x.shape(), std::move(v), {x.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    double inner = 0.0;
    for (std::size_t j = 0; j < self.value.size(); ++j) inner += self.grad[j] * self.value[j];
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.value[i] * (self.grad[i] - inner);
    }
  };
  return Tensor(n);
}

Tensor cross_entropy(const Tensor& logits, std::size_t gold) {
  check_rank(logits, 1, "cross_entropy");
  if (gold >= logits.size()) {
    throw_data("cross_entropy: gold index " + std::to_string(gold) + " out of range");
  }
  const auto& in = logits.values();
  double mx = in[0];
  for (double v : in) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : in) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  auto n = make_node({1}, {lse - in[gold]}, {logits.node()});
  // saved softmax for the backward pass
  std::vector<double> probs(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) probs[i] = std::exp(in[i] - mx) / z;
  n->backward_fn = [probs = std::move(probs), gold](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    const double g0 = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += g0 * (probs[i] - (i == gold ? 1.0 : 0.0));
    }
  };
  return Tensor(n);
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  auto n = make_node({1}, {acc}, {x.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    const double g0 = self.grad[0];
    for (double& v : g) v += g0;
  };
  return Tensor(n);
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw_data("concat: no parts");
  std::vector<double> v;
  std::vector<NodePtr> parents;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    check_rank(p, 1, "concat");
    v.insert(v.end(), p.values().begin(), p.values().end());
    parents.push_back(p.node());
    sizes.push_back(p.size());
  }
  // order of argument construction is unspecified, so size v before moving it
  const std::size_t total = v.size();
  auto n = make_node({total}, std::move(v), std::move(parents));
  n->backward_fn = [sizes](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      auto& p = self.parents[k];
      if (wants_grad(p)) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[off + i];
      }
      off += sizes[k];
    }
  };
  return Tensor(n);
}

Tensor hconcat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw_data("hconcat: no parts");
  const std::size_t rows = parts[0].shape()[0];
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  std::vector<NodePtr> parents;
  for (const auto& p : parts) {
    check_rank(p, 2, "hconcat");
    if (p.shape()[0] != rows) throw_data("hconcat: row counts differ");
    widths.push_back(p.shape()[1]);
    cols += p.shape()[1];
    parents.push_back(p.node());
  }
  std::vector<double> v(rows * cols);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& src = parts[k].values();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(src.begin() + i * widths[k], src.begin() + (i + 1) * widths[k],
                v.begin() + i * cols + off);
    }
    off += widths[k];
  }
  auto n = make_node({rows, cols}, std::move(v), std::move(parents));
  n->backward_fn = [rows, cols, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      auto& p = self.parents[k];
      if (wants_grad(p)) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < widths[k]; ++j) {
            g[i * widths[k] + j] += self.grad[i * cols + off + j];
          }
        }
      }
      off += widths[k];
    }
  };
  return Tensor(n);
}

Tensor element(const Tensor& x, std::size_t i) {
  if (i >= x.size()) throw_data("element: index " + std::to_string(i) + " out of range");
  auto n = make_node({1}, {x.values()[i]}, {x.node()});
  n->backward_fn = [i](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    p->ensure_grad()[i] += self.grad[0];
  };
  return Tensor(n);
}

Tensor row(const Tensor& x, std::size_t i) {
  check_rank(x, 2, "row");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (i >= rows) throw_data("row: index " + std::to_string(i) + " out of range");
  std::vector<double> v(x.values().begin() + i * cols, x.values().begin() + (i + 1) * cols);
  auto n = make_node({cols}, std::move(v), {x.node()});
  n->backward_fn = [i, cols](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += self.grad[j];
  };
  return Tensor(n);
}

Tensor linear_combination(const std::vector<Tensor>& vs, const Tensor& w) {
  if (vs.empty()) throw_data("linear_combination: no vectors");
  check_rank(w, 1, "linear_combination");
  if (w.size() != vs.size()) {
    throw_data("linear_combination: " + std::to_string(vs.size()) + " vectors but " +
               std::to_string(w.size()) + " weights");
  }
  const std::size_t dim = vs[0].size();
  std::vector<NodePtr> parents;
  for (const auto& v : vs) {
    check_rank(v, 1, "linear_combination");
    if (v.size() != dim) throw_data("linear_combination: vector dimensions differ");
    parents.push_back(v.node());
  }
  parents.push_back(w.node());
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < vs.size(); ++k) {
    const double wk = w.values()[k];
    for (std::size_t j = 0; j < dim; ++j) out[j] += wk * vs[k].values()[j];
  }
  auto n = make_node({dim}, std::move(out), std::move(parents));
  const std::size_t m = vs.size();
  n->backward_fn = [m, dim](Node& self) {
    auto& pw = self.parents[m];
    for (std::size_t k = 0; k < m; ++k) {
      auto& pv = self.parents[k];
      const double wk = pw->value[k];
      if (wants_grad(pv)) {
        auto& g = pv->ensure_grad();
        for (std::size_t j = 0; j < dim; ++j) g[j] += wk * self.grad[j];
      }
      if (wants_grad(pw)) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) acc += pv->value[j] * self.grad[j];
        pw->ensure_grad()[k] += acc;
      }
    }
  };
  return Tensor(n);
}

Tensor embedding_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  check_rank(table, 2, "embedding_rows");
  const std::size_t rows = table.shape()[0], dim = table.shape()[1];
  for (std::size_t id : ids) {
    if (id >= rows) {
      throw_data("embedding_rows: id " + std::to_string(id) + " outside table of " +
                 std::to_string(rows) + " rows");
    }
  }
  std::vector<double> v(ids.size() * dim);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::copy(table.values().begin() + ids[r] * dim, table.values().begin() + (ids[r] + 1) * dim,
              v.begin() + r * dim);
  }
  auto n = make_node({ids.size(), dim}, std::move(v), {table.node()});
  n->backward_fn = [ids, dim](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t r = 0; r < ids.size(); ++r) {
      for (std::size_t j = 0; j < dim; ++j) g[ids[r] * dim + j] += self.grad[r * dim + j];
    }
  };
  return Tensor(n);
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  check_rank(input, 2, "conv1d");
  if (kernel.rank() != 3) throw_data("conv1d: kernel must be [k x d_in x d_out]");
  const std::size_t n = input.shape()[0], d_in = input.shape()[1];
  const std::size_t k = kernel.shape()[0], kd_in = kernel.shape()[1], d_out = kernel.shape()[2];
  if (k % 2 == 0) throw_data("conv1d: window size must be odd");
  if (kd_in != d_in) {
    throw_data("conv1d: kernel expects " + std::to_string(kd_in) + " input features, input has " +
               std::to_string(d_in));
  }
  check_rank(bias, 1, "conv1d");
  if (bias.shape()[0] != d_out) throw_data("conv1d: bias dimension mismatch");
  std::vector<double> v(n * d_out);
  kernels::conv1d_forward(input.values().data(), kernel.values().data(), bias.values().data(),
                          v.data(), n, d_in, d_out, k);
  auto node = make_node({n, d_out}, std::move(v), {input.node(), kernel.node(), bias.node()});
  node->backward_fn = [n, d_in, d_out, k](Node& self) {
    auto& pin = self.parents[0];
    auto& pker = self.parents[1];
    auto& pbias = self.parents[2];
    if (wants_grad(pin)) {
      kernels::conv1d_backward_input(self.grad.data(), pker->value.data(),
                                     pin->ensure_grad().data(), n, d_in, d_out, k);
    }
    if (wants_grad(pker)) {
      kernels::conv1d_backward_kernel(self.grad.data(), pin->value.data(),
                                      pker->ensure_grad().data(), n, d_in, d_out, k);
    }
    if (wants_grad(pbias)) {
      kernels::conv1d_backward_bias(self.grad.data(), pbias->ensure_grad().data(), n, d_out);
    }
  };
  return Tensor(node);
}

Tensor max_pool_columns(const Tensor& h) {
  check_rank(h, 2, "max_pool_columns");
  const std::size_t n = h.shape()[0], m = h.shape()[1];
  std::vector<double> v(m);
  std::vector<std::size_t> arg(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t best = 0;
    double bv = h.values()[j];
    for (std::size_t i = 1; i < n; ++i) {
      const double x = h.values()[i * m + j];
      if (x > bv) {  // strict: ties keep the lowest index
        bv = x;
        best = i;
      }
    }
    v[j] = bv;
    arg[j] = best;
  }
  auto node = make_node({m}, std::move(v), {h.node()});
  node->backward_fn = [arg, m](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t j = 0; j < m; ++j) g[arg[j] * m + j] += self.grad[j];
  };
  return Tensor(node);
}

Tensor piecewise_max_pool(const Tensor& h, std::size_t split_a, std::size_t split_b) {
  check_rank(h, 2, "piecewise_max_pool");
  const std::size_t n = h.shape()[0], m = h.shape()[1];
  if (!(split_a <= split_b && split_b < n)) {
    throw_data("piecewise_max_pool: splits (" + std::to_string(split_a) + "," +
               std::to_string(split_b) + ") out of range for " + std::to_string(n) + " rows");
  }
  // segment boundaries, half-open [lo, hi)
  const std::size_t lo[3] = {0, split_a + 1, split_b + 1};
  const std::size_t hi[3] = {split_a + 1, split_b + 1, n};
  constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);
  std::vector<double> v(3 * m, 0.0);
  std::vector<std::size_t> arg(3 * m, kEmpty);
  for (int s = 0; s < 3; ++s) {
    if (lo[s] >= hi[s]) continue;  // empty segment pools to zero
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t best = lo[s];
      double bv = h.values()[lo[s] * m + j];
      for (std::size_t i = lo[s] + 1; i < hi[s]; ++i) {
        const double x = h.values()[i * m + j];
        if (x > bv) {
          bv = x;
          best = i;
        }
      }
      v[s * m + j] = bv;
      arg[s * m + j] = best;
    }
  }
  auto node = make_node({3 * m}, std::move(v), {h.node()});
  node->backward_fn = [arg, m](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t t = 0; t < arg.size(); ++t) {
      if (arg[t] == static_cast<std::size_t>(-1)) continue;
      g[arg[t] * m + (t % m)] += self.grad[t];
    }
  };
  return Tensor(node);
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw_data("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& mv : mask) mv = rng.uniform() >= rate ? keep_scale : 0.0;
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x.values()[i] * mask[i];
  auto n = make_node(x.shape(), std::move(v), {x.node()});
  n->backward_fn = [mask = std::move(mask)](Node& self) {
    auto& p = self.parents[0];
    if (!wants_grad(p)) return;
    auto& g = p->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  };
  return Tensor(n);
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw_data("backward: undefined tensor");
  if (loss.size() != 1) {
    throw_data("backward: loss must be a scalar, got " + shape_str(loss.shape()));
  }
  // Collect the reachable subgraph that influences gradients.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.node().get()};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Node* cur = stack.back();
    stack.pop_back();
    order.push_back(cur);
    for (const auto& p : cur->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });
  loss.node()->ensure_grad()[0] += 1.0;
  for (Node* node : order) {
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

double finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                         double eps) {
  if (eps < 1e-7 || eps > 1e-4) {
    throw_data("finite_diff_check: eps must lie in [1e-7, 1e-4]");
  }
  Tensor first = f();
  if (first.size() != 1) throw_data("finite_diff_check: f must produce a scalar");
  Tensor second = f();
  if (first.values() != second.values()) {
    throw_data("finite_diff_check: f is not deterministic");
  }
  for (const auto& p : params) {
    Tensor handle = p;  // handles share the node
    handle.zero_grad();
  }
  Tensor loss = f();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor handle = params[pi];
    auto& values = handle.values_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + eps;
      const double f_plus = f().scalar_value();
      values[i] = orig - eps;
      const double f_minus = f().scalar_value();
      values[i] = orig;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

bool all_finite(const Tensor& t) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace relex
