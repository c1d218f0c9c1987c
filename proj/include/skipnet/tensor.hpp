#pragma once

// Dense 64-bit tensors with define-by-run reverse-mode differentiation.
//
// Every op returns a fresh Tensor whose node remembers its parents and a
// closure that pushes the node's gradient back into them. GradTape orders
// the ancestry of a scalar loss topologically and replays the closures in
// reverse. Tensors and tapes are confined to the thread that built them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "skipnet/error.hpp"

namespace skipnet {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until something writes into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // null for leaves

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : node_(std::make_shared<detail::Node>()) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                           std::to_string(data.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return Tensor(Shape{}, {value}, requires_grad);
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false) {
    return Tensor(Shape{rows, cols}, std::move(data), requires_grad);
  }

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }

  // Zeros when no backward pass has reached this tensor.
  std::span<const double> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }

  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  double item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
    return node_->data[0];
  }
  double at(std::size_t i, std::size_t j) const { return node_->data[i * cols() + j]; }

  // Same values, no history, no gradient.
  Tensor detach() const { return Tensor(shape(), node_->data, false); }
  // Independent copy that keeps the requires_grad flag (used for snapshots).
  Tensor clone() const { return Tensor(shape(), node_->data, requires_grad()); }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {

// Builds an op result. History is kept only when some input needs gradients.
inline Tensor make_op(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                      std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  for (const Tensor& t : inputs) node->requires_grad = node->requires_grad || t.requires_grad();
  if (node->requires_grad) {
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

inline Tensor make_op(Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
                      std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  for (const Tensor& t : inputs) node->requires_grad = node->requires_grad || t.requires_grad();
  if (node->requires_grad) {
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Grad buffer of parent `i` if it takes gradients, else null.
inline double* parent_grad(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p->grad.data();
}

inline void require_matrix(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

}  // namespace detail

// Topologically ordered record of the graph behind one scalar root.
class GradTape {
 public:
  static GradTape record(const Tensor& root) {
    if (!root.defined() || root.numel() != 1) {
      throw ContractError("backward needs a scalar loss, got " +
                          (root.defined() ? shape_str(root.shape()) : std::string("undefined")));
    }
    GradTape tape;
    tape.root_ = root.node_ptr();
    if (!root.requires_grad()) return tape;

    // Iterative post-order DFS: parents land before children.
    std::unordered_set<detail::Node*> seen{root.node()};
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{root.node(), 0}};
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        detail::Node* parent = node->parents[next++].get();
        if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        tape.order_.push_back(node);
        stack.pop_back();
      }
    }
    return tape;
  }

  // Seeds d(root)=1 and replays every recorded rule once, children first.
  // Interior gradients are reset; leaf gradients accumulate.
  void backward() {
    if (order_.empty()) return;
    for (detail::Node* n : order_) {
      if (n->backward) n->grad.assign(n->data.size(), 0.0);
    }
    root_->ensure_grad();
    root_->grad[0] += 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      if ((*it)->backward) (*it)->backward(**it);
    }
  }

  void zero_grad() {
    for (detail::Node* n : order_) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  }

  std::size_t size() const { return order_.size(); }

 private:
  std::shared_ptr<detail::Node> root_;
  std::vector<detail::Node*> order_;
};

inline void backward(const Tensor& loss) { GradTape::record(loss).backward(); }

// ---------------------------------------------------------------------------
// Primitives

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions of " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " disagree");
  }
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return detail::make_op({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    const double* g = self.grad.data();
    const double* A = self.parents[0]->data.data();
    const double* B = self.parents[1]->data.data();
    if (double* ga = detail::parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (double* gb = detail::parent_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          double* gbrow = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return detail::make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& g = self.grad;
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* gp = detail::parent_grad(self, p)) {
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
      }
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return detail::make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& g = self.grad;
    if (double* ga = detail::parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (double* gb = detail::parent_grad(self, 1)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return detail::make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& g = self.grad;
    const auto& A = self.parents[0]->data;
    const auto& B = self.parents[1]->data;
    if (double* ga = detail::parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (double* gb = detail::parent_grad(self, 1)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  return detail::make_op(a.shape(), std::move(out), {a}, [c](detail::Node& self) {
    double* ga = detail::parent_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * c;
  });
}

// x[b×n] + bias[n] broadcast over rows.
inline Tensor add_bias(const Tensor& x, const Tensor& bias) {
  detail::require_matrix(x, "add_bias");
  const std::size_t b = x.rows(), n = x.cols();
  if (bias.numel() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not fit " +
                         shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const double* bv = bias.data().data();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  }
  return detail::make_op(x.shape(), std::move(out), {x, bias}, [b, n](detail::Node& self) {
    const double* g = self.grad.data();
    if (double* gx = detail::parent_grad(self, 0)) {
      for (std::size_t i = 0; i < b * n; ++i) gx[i] += g[i];
    }
    if (double* gb = detail::parent_grad(self, 1)) {
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
    }
  });
}

// Concatenation along the last axis of equally tall matrices.
inline Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat: nothing to concatenate");
  const std::size_t b = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& t : parts) {
    detail::require_matrix(t, "concat");
    if (t.rows() != b) {
      throw DimensionError("concat: row counts differ (" + shape_str(parts.front().shape()) +
                           " vs " + shape_str(t.shape()) + ")");
    }
    widths.push_back(t.cols());
    total += t.cols();
  }
  std::vector<double> out(b * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double* src = parts[p].data().data();
    const std::size_t w = widths[p];
    for (std::size_t i = 0; i < b; ++i) {
      std::copy_n(src + i * w, w, out.data() + i * total + offset);
    }
    offset += w;
  }
  return detail::make_op({b, total}, std::move(out), parts,
                         [b, total, widths = std::move(widths)](detail::Node& self) {
                           std::size_t offset = 0;
                           for (std::size_t p = 0; p < widths.size(); ++p) {
                             const std::size_t w = widths[p];
                             if (double* gp = detail::parent_grad(self, p)) {
                               for (std::size_t i = 0; i < b; ++i) {
                                 const double* g = self.grad.data() + i * total + offset;
                                 for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[j];
                               }
                             }
                             offset += w;
                           }
                         });
}

inline Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  detail::require_matrix(x, "slice_cols");
  const std::size_t b = x.rows(), n = x.cols();
  if (begin + count > n || count == 0) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_str(x.shape()));
  }
  std::vector<double> out(b * count);
  for (std::size_t i = 0; i < b; ++i) {
    std::copy_n(x.data().data() + i * n + begin, count, out.data() + i * count);
  }
  return detail::make_op({b, count}, std::move(out), {x}, [b, n, begin, count](detail::Node& self) {
    double* gx = detail::parent_grad(self, 0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < count; ++j) gx[i * n + begin + j] += self.grad[i * count + j];
    }
  });
}

inline Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  detail::require_matrix(x, "slice_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (begin + count > m) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          x.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  return detail::make_op({count, n}, std::move(out), {x}, [begin, n](detail::Node& self) {
    double* gx = detail::parent_grad(self, 0) + begin * n;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

namespace detail {

template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df_from_output) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x.data()[i]);
  return make_op(x.shape(), std::move(out), {x}, [df_from_output](Node& self) {
    double* gx = parent_grad(self, 0);
    const auto& xs = self.parents[0]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.grad[i] * df_from_output(xs[i], self.data[i]);
    }
  });
}

inline double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline Tensor relu(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& x) {
  return detail::unary(
      x, detail::sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return detail::make_op({}, {s}, {x}, [](detail::Node& self) {
    double* gx = detail::parent_grad(self, 0);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < self.parents[0]->data.size(); ++i) gx[i] += g;
  });
}

inline Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

namespace detail {

// Row softmax restricted to columns with keep[i*n+j] != 0; dropped columns get 0.
inline Tensor softmax_rows_impl(const Tensor& x, const double* keep) {
  require_matrix(x, "softmax_rows");
  const std::size_t b = x.rows(), n = x.cols();
  std::vector<double> out(b * n, 0.0);
  const double* xs = x.data().data();
  for (std::size_t i = 0; i < b; ++i) {
    double hi = -INFINITY;
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = xs[i * n + j];
      if (std::isnan(v)) throw NumericError("softmax_rows: NaN in row " + std::to_string(i));
      if (keep && keep[i * n + j] == 0.0) continue;
      hi = std::max(hi, v);
      any = true;
    }
    if (!any) throw ContractError("softmax_rows: row " + std::to_string(i) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (keep && keep[i * n + j] == 0.0) continue;
      out[i * n + j] = std::exp(xs[i * n + j] - hi);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  return make_op(x.shape(), std::move(out), {x}, [b, n](Node& self) {
    double* gx = parent_grad(self, 0);
    const double* y = self.data.data();
    const double* g = self.grad.data();
    for (std::size_t i = 0; i < b; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

}  // namespace detail

inline Tensor softmax_rows(const Tensor& x) { return detail::softmax_rows_impl(x, nullptr); }

// Softmax over the entries of each row where mask is 1; masked entries are exactly 0.
inline Tensor masked_softmax_rows(const Tensor& x, const Tensor& mask) {
  detail::require_same_shape(x, mask, "masked_softmax_rows");
  return detail::softmax_rows_impl(x, mask.data().data());
}

// Rows of `table` picked by index; gradient scatter-adds into the picked rows.
inline Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  detail::require_matrix(table, "gather_rows");
  const std::size_t v = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) throw UnknownIdError(std::to_string(ids[r]));
    std::copy_n(table.data().data() + ids[r] * d, d, out.data() + r * d);
  }
  return detail::make_op({ids.size(), d}, std::move(out), {table},
                         [d, ids = std::vector<std::size_t>(ids.begin(), ids.end())](
                             detail::Node& self) {
                           double* gt = detail::parent_grad(self, 0);
                           for (std::size_t r = 0; r < ids.size(); ++r) {
                             double* dst = gt + ids[r] * d;
                             const double* g = self.grad.data() + r * d;
                             for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
                           }
                         });
}

// Row i of the result is a's row if keep[i] != 0, else b's row. `keep` is constant.
inline Tensor where_rows(std::span<const double> keep, const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "where_rows");
  detail::require_matrix(a, "where_rows");
  const std::size_t rows = a.rows(), n = a.cols();
  if (keep.size() != rows) {
    throw DimensionError("where_rows: " + std::to_string(keep.size()) + " mask entries for " +
                         shape_str(a.shape()));
  }
  std::vector<double> out(rows * n);
  std::vector<bool> pick(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    pick[i] = keep[i] != 0.0;
    const double* src = (pick[i] ? a : b).data().data() + i * n;
    std::copy_n(src, n, out.data() + i * n);
  }
  return detail::make_op(a.shape(), std::move(out), {a, b},
                         [n, pick = std::move(pick)](detail::Node& self) {
                           double* ga = detail::parent_grad(self, 0);
                           double* gb = detail::parent_grad(self, 1);
                           for (std::size_t i = 0; i < pick.size(); ++i) {
                             double* dst = pick[i] ? ga : gb;
                             if (!dst) continue;
                             for (std::size_t j = 0; j < n; ++j) dst[i * n + j] += self.grad[i * n + j];
                           }
                         });
}

// x[b×n] with row i multiplied by w[i] (w is b×1).
inline Tensor scale_rows(const Tensor& x, const Tensor& w) {
  detail::require_matrix(x, "scale_rows");
  const std::size_t b = x.rows(), n = x.cols();
  if (w.numel() != b) {
    throw DimensionError("scale_rows: weights " + shape_str(w.shape()) + " for " +
                         shape_str(x.shape()));
  }
  std::vector<double> out(b * n);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.data()[i * n + j] * w.data()[i];
  }
  return detail::make_op(x.shape(), std::move(out), {x, w}, [b, n](detail::Node& self) {
    const double* X = self.parents[0]->data.data();
    const double* W = self.parents[1]->data.data();
    const double* g = self.grad.data();
    if (double* gx = detail::parent_grad(self, 0)) {
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] * W[i];
      }
    }
    if (double* gw = detail::parent_grad(self, 1)) {
      for (std::size_t i = 0; i < b; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * X[i * n + j];
        gw[i] += s;
      }
    }
  });
}

}  // namespace skipnet
