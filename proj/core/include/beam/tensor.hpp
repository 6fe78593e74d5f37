#pragma once

// Reverse-mode differentiable tensor substrate. Dynamic single-shot graphs:
// every operation records its inputs and a backward rule; backward() walks the
// graph once in reverse topological order and accumulates gradients on every
// tensor with requires_grad. Re-running backward through an already-consumed
// graph is an error.
//
// Scalar type is a template parameter: training runs in float, gradient
// checks re-instantiate everything in double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "beam/common.hpp"

namespace beam {

using Shape = std::vector<int>;

inline int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Worker count for the matrix-product inner loops. Partitioning is by output
/// row, so results are bit-identical for every thread count.
inline int& num_threads() {
  static int n = 1;
  return n;
}

inline void set_num_threads(int n) { num_threads() = n < 1 ? 1 : n; }

namespace detail {

template <class S>
struct Node {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool consumed = false;  // set once backward has used this node's rule
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // null for leaves/constants
  const char* op = "leaf";

  bool is_leaf() const { return parents.empty(); }

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), S(0));
  }
};

template <class S>
inline void check_finite(const Node<S>& n) {
  for (const S& v : n.value) {
    if (!std::isfinite(static_cast<double>(v)))
      throw RuntimeError(std::string("non-finite value produced by op '") + n.op + "'");
  }
}

// C (m x p) = A (m x k) . B (k x p), accumulating with `beta` (0 overwrite, 1 add).
template <class S>
void gemm_rows(const S* a, const S* b, S* c, int k, int p, bool accumulate, int row_begin, int row_end) {
  for (int i = row_begin; i < row_end; ++i) {
    S* ci = c + static_cast<int64_t>(i) * p;
    if (!accumulate) std::fill(ci, ci + p, S(0));
    const S* ai = a + static_cast<int64_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const S av = ai[kk];
      if (av == S(0)) continue;
      const S* bk = b + static_cast<int64_t>(kk) * p;
      for (int j = 0; j < p; ++j) ci[j] += av * bk[j];
    }
  }
}

template <class S>
void gemm(const S* a, const S* b, S* c, int m, int k, int p, bool accumulate) {
  const int threads = num_threads();
  const int64_t work = static_cast<int64_t>(m) * k * p;
  if (threads <= 1 || work < (1 << 20) || m < 2 * threads) {
    gemm_rows(a, b, c, k, p, accumulate, 0, m);
    return;
  }
  const int nt = std::min<int>(threads, m);
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  const int chunk = (m + nt - 1) / nt;
  for (int t = 1; t < nt; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(m, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([=] { gemm_rows(a, b, c, k, p, accumulate, lo, hi); });
  }
  gemm_rows(a, b, c, k, p, accumulate, 0, std::min(m, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace detail

template <class S>
class Var {
 public:
  using NodeT = detail::Node<S>;

  Var() = default;

  static Var constant(Shape shape, std::vector<S> values) { return make(std::move(shape), std::move(values), false); }

  static Var leaf(Shape shape, std::vector<S> values) { return make(std::move(shape), std::move(values), true); }

  static Var scalar_const(S v) { return constant({1}, {v}); }

  static Var zeros(Shape shape, bool requires_grad = false) {
    std::vector<S> v(shape_size(shape), S(0));
    return make(std::move(shape), std::move(v), requires_grad);
  }

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int64_t size() const { return static_cast<int64_t>(n_->value.size()); }
  int dim(int i) const { return n_->shape[i]; }
  int ndim() const { return static_cast<int>(n_->shape.size()); }
  bool requires_grad() const { return n_->requires_grad; }

  const std::vector<S>& values() const { return n_->value; }
  std::vector<S>& mutable_values() { return n_->value; }  // leaves only (optimizer updates)

  S item() const {
    require(size() == 1, "item() on non-scalar tensor " + shape_str(shape()));
    return n_->value[0];
  }

  /// Gradient accumulated by backward(); zeros if this leaf was never reached.
  std::vector<S> grad() const {
    if (n_->grad.empty()) return std::vector<S>(n_->value.size(), S(0));
    return n_->grad;
  }

  void zero_grad() { n_->grad.clear(); }

  NodeT* node() const { return n_.get(); }
  std::shared_ptr<NodeT> sp() const { return n_; }

  static Var from_node(std::shared_ptr<NodeT> n) {
    Var v;
    v.n_ = std::move(n);
    return v;
  }

 private:
  static Var make(Shape shape, std::vector<S> values, bool requires_grad) {
    require(shape_size(shape) == static_cast<int64_t>(values.size()),
            "tensor values length does not match shape " + shape_str(shape));
    auto n = std::make_shared<NodeT>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    Var v;
    v.n_ = std::move(n);
    return v;
  }

  std::shared_ptr<NodeT> n_;
};

namespace detail {

template <class S>
std::shared_ptr<Node<S>> new_op_node(const char* op, Shape shape, std::vector<S> value,
                                     std::vector<std::shared_ptr<Node<S>>> parents,
                                     std::function<void(Node<S>&)> backprop) {
  auto n = std::make_shared<Node<S>>();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  check_finite(*n);
  return n;
}

template <class S>
void accumulate(Node<S>& parent, const S* g, int64_t len) {
  parent.ensure_grad();
  for (int64_t i = 0; i < len; ++i) parent.grad[i] += g[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

template <class S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul expects 2-D tensors");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), p = b.dim(1);
  require(k == k2, "matmul inner dimensions differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<S> out(static_cast<size_t>(m) * p);
  detail::gemm(a.values().data(), b.values().data(), out.data(), m, k, p, false);
  auto an = a.sp();
  auto bn = b.sp();
  auto node = detail::new_op_node<S>(
      "matmul", {m, p}, std::move(out), {an, bn}, [m, k, p](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        auto& B = *n.parents[1];
        const S* G = n.grad.data();
        if (A.requires_grad) {
          // dA = G . B^T  (computed row-wise without materializing B^T)
          A.ensure_grad();
          for (int i = 0; i < m; ++i) {
            S* gA = A.grad.data() + static_cast<int64_t>(i) * k;
            const S* gi = G + static_cast<int64_t>(i) * p;
            for (int kk = 0; kk < k; ++kk) {
              const S* bk = B.value.data() + static_cast<int64_t>(kk) * p;
              S acc = S(0);
              for (int j = 0; j < p; ++j) acc += gi[j] * bk[j];
              gA[kk] += acc;
            }
          }
        }
        if (B.requires_grad) {
          // dB = A^T . G
          B.ensure_grad();
          for (int kk = 0; kk < k; ++kk) {
            S* gB = B.grad.data() + static_cast<int64_t>(kk) * p;
            for (int i = 0; i < m; ++i) {
              const S av = A.value[static_cast<int64_t>(i) * k + kk];
              if (av == S(0)) continue;
              const S* gi = G + static_cast<int64_t>(i) * p;
              for (int j = 0; j < p; ++j) gB[j] += av * gi[j];
            }
          }
        }
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> transpose(const Var<S>& a) {
  require(a.ndim() == 2, "transpose expects a 2-D tensor");
  const int m = a.dim(0), p = a.dim(1);
  std::vector<S> out(static_cast<size_t>(m) * p);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) out[static_cast<int64_t>(j) * m + i] = a.values()[static_cast<int64_t>(i) * p + j];
  auto node = detail::new_op_node<S>(
      "transpose", {p, m}, std::move(out), {a.sp()}, [m, p](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (int j = 0; j < p; ++j)
          for (int i = 0; i < m; ++i)
            A.grad[static_cast<int64_t>(i) * p + j] += n.grad[static_cast<int64_t>(j) * m + i];
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require(a.shape() == b.shape(), "add shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<S> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] += b.values()[i];
  auto node = detail::new_op_node<S>(
      "add", a.shape(), std::move(out), {a.sp(), b.sp()},
      [](detail::Node<S>& n) {
        for (auto& p : n.parents)
          if (p->requires_grad) detail::accumulate(*p, n.grad.data(), static_cast<int64_t>(n.grad.size()));
      });
  return Var<S>::from_node(std::move(node));
}

/// Matrix plus row vector, broadcast over rows (bias add).
template <class S>
Var<S> add_rowvec(const Var<S>& a, const Var<S>& v) {
  require(a.ndim() == 2 && v.ndim() == 1 && a.dim(1) == v.dim(0), "add_rowvec expects (m x p) + (p)");
  const int m = a.dim(0), p = a.dim(1);
  std::vector<S> out(a.values());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) out[static_cast<int64_t>(i) * p + j] += v.values()[j];
  auto node = detail::new_op_node<S>(
      "add_rowvec", a.shape(), std::move(out), {a.sp(), v.sp()},
      [m, p](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        auto& V = *n.parents[1];
        if (A.requires_grad) detail::accumulate(A, n.grad.data(), static_cast<int64_t>(n.grad.size()));
        if (V.requires_grad) {
          V.ensure_grad();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < p; ++j) V.grad[j] += n.grad[static_cast<int64_t>(i) * p + j];
        }
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> scale(const Var<S>& a, double c) {
  std::vector<S> out(a.values());
  const S cs = static_cast<S>(c);
  for (auto& v : out) v *= cs;
  auto node = detail::new_op_node<S>(
      "scale", a.shape(), std::move(out), {a.sp()}, [cs](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) A.grad[i] += cs * n.grad[i];
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  return add(a, scale(b, -1.0));
}

/// Concatenation of 1-D tensors.
template <class S>
Var<S> concat(const std::vector<Var<S>>& parts) {
  require(!parts.empty(), "concat of zero tensors");
  std::vector<S> out;
  std::vector<std::shared_ptr<detail::Node<S>>> parents;
  std::vector<int64_t> offsets;
  for (const auto& p : parts) {
    require(p.ndim() == 1, "concat expects 1-D tensors");
    offsets.push_back(static_cast<int64_t>(out.size()));
    out.insert(out.end(), p.values().begin(), p.values().end());
    parents.push_back(p.sp());
  }
  const int total = static_cast<int>(out.size());
  auto node = detail::new_op_node<S>(
      "concat", {total}, std::move(out), std::move(parents), [offsets](detail::Node<S>& n) {
        for (size_t i = 0; i < n.parents.size(); ++i) {
          auto& p = *n.parents[i];
          if (!p.requires_grad) continue;
          detail::accumulate(p, n.grad.data() + offsets[i], static_cast<int64_t>(p.value.size()));
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Stacks B equal-length 1-D tensors into a (B x F) matrix.
template <class S>
Var<S> stack_rows(const std::vector<Var<S>>& rows) {
  require(!rows.empty(), "stack_rows of zero tensors");
  const int f = rows[0].dim(0);
  std::vector<S> out;
  out.reserve(rows.size() * f);
  std::vector<std::shared_ptr<detail::Node<S>>> parents;
  for (const auto& r : rows) {
    require(r.ndim() == 1 && r.dim(0) == f, "stack_rows expects equal-length 1-D tensors");
    out.insert(out.end(), r.values().begin(), r.values().end());
    parents.push_back(r.sp());
  }
  const int b = static_cast<int>(rows.size());
  auto node = detail::new_op_node<S>(
      "stack_rows", {b, f}, std::move(out), std::move(parents), [f](detail::Node<S>& n) {
        for (size_t i = 0; i < n.parents.size(); ++i) {
          auto& p = *n.parents[i];
          if (!p.requires_grad) continue;
          detail::accumulate(p, n.grad.data() + static_cast<int64_t>(i) * f, f);
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Contiguous slice of a 1-D tensor: elements [start, start+len).
template <class S>
Var<S> slice(const Var<S>& a, int start, int len) {
  require(a.ndim() == 1, "slice expects a 1-D tensor");
  require(start >= 0 && len >= 1 && start + len <= a.dim(0), "slice range out of bounds");
  std::vector<S> out(a.values().begin() + start, a.values().begin() + start + len);
  auto node = detail::new_op_node<S>(
      "slice", {len}, std::move(out), {a.sp()}, [start, len](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (int i = 0; i < len; ++i) A.grad[start + i] += n.grad[i];
      });
  return Var<S>::from_node(std::move(node));
}

/// Column block [start, start+len) of a 2-D tensor (head split).
template <class S>
Var<S> slice_cols(const Var<S>& a, int start, int len) {
  require(a.ndim() == 2, "slice_cols expects a 2-D tensor");
  const int m = a.dim(0), p = a.dim(1);
  require(start >= 0 && len >= 1 && start + len <= p, "slice_cols range out of bounds");
  std::vector<S> out(static_cast<size_t>(m) * len);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < len; ++j) out[static_cast<int64_t>(i) * len + j] = a.values()[static_cast<int64_t>(i) * p + start + j];
  auto node = detail::new_op_node<S>(
      "slice_cols", {m, len}, std::move(out), {a.sp()},
      [m, p, start, len](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < len; ++j)
            A.grad[static_cast<int64_t>(i) * p + start + j] += n.grad[static_cast<int64_t>(i) * len + j];
      });
  return Var<S>::from_node(std::move(node));
}

/// Horizontal concatenation of 2-D tensors with equal row counts (head merge).
template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  require(!parts.empty(), "concat_cols of zero tensors");
  const int m = parts[0].dim(0);
  int total = 0;
  std::vector<int> widths;
  std::vector<std::shared_ptr<detail::Node<S>>> parents;
  for (const auto& p : parts) {
    require(p.ndim() == 2 && p.dim(0) == m, "concat_cols row count mismatch");
    widths.push_back(p.dim(1));
    total += p.dim(1);
    parents.push_back(p.sp());
  }
  std::vector<S> out(static_cast<size_t>(m) * total);
  int col = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    const int w = widths[k];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j)
        out[static_cast<int64_t>(i) * total + col + j] = parts[k].values()[static_cast<int64_t>(i) * w + j];
    col += w;
  }
  auto node = detail::new_op_node<S>(
      "concat_cols", {m, total}, std::move(out), std::move(parents), [m, total, widths](detail::Node<S>& n) {
        int col = 0;
        for (size_t k = 0; k < n.parents.size(); ++k) {
          const int w = widths[k];
          auto& p = *n.parents[k];
          if (p.requires_grad) {
            p.ensure_grad();
            for (int i = 0; i < m; ++i)
              for (int j = 0; j < w; ++j)
                p.grad[static_cast<int64_t>(i) * w + j] += n.grad[static_cast<int64_t>(i) * total + col + j];
          }
          col += w;
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Mean over one axis of a 2-D tensor (axis 0 -> per-column means,
/// axis 1 -> per-row means), or mean of a 1-D tensor to a scalar.
template <class S>
Var<S> mean_over_axis(const Var<S>& a, int axis = 0) {
  if (a.ndim() == 1) {
    const int n = a.dim(0);
    S acc = S(0);
    for (const S& v : a.values()) acc += v;
    std::vector<S> out{acc / static_cast<S>(n)};
    auto node = detail::new_op_node<S>(
        "mean", {1}, std::move(out), {a.sp()}, [n](detail::Node<S>& nd) {
          auto& A = *nd.parents[0];
          A.ensure_grad();
          const S g = nd.grad[0] / static_cast<S>(n);
          for (auto& v : A.grad) v += g;
        });
    return Var<S>::from_node(std::move(node));
  }
  require(a.ndim() == 2 && (axis == 0 || axis == 1), "mean_over_axis expects a 2-D tensor and axis 0/1");
  const int m = a.dim(0), p = a.dim(1);
  if (axis == 0) {
    std::vector<S> out(p, S(0));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < p; ++j) out[j] += a.values()[static_cast<int64_t>(i) * p + j];
    for (auto& v : out) v /= static_cast<S>(m);
    auto node = detail::new_op_node<S>(
        "mean_axis0", {p}, std::move(out), {a.sp()}, [m, p](detail::Node<S>& nd) {
          auto& A = *nd.parents[0];
          A.ensure_grad();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < p; ++j) A.grad[static_cast<int64_t>(i) * p + j] += nd.grad[j] / static_cast<S>(m);
        });
    return Var<S>::from_node(std::move(node));
  }
  std::vector<S> out(m, S(0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) out[i] += a.values()[static_cast<int64_t>(i) * p + j];
    out[i] /= static_cast<S>(p);
  }
  auto node = detail::new_op_node<S>(
      "mean_axis1", {m}, std::move(out), {a.sp()}, [m, p](detail::Node<S>& nd) {
        auto& A = *nd.parents[0];
        A.ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < p; ++j) A.grad[static_cast<int64_t>(i) * p + j] += nd.grad[i] / static_cast<S>(p);
      });
  return Var<S>::from_node(std::move(node));
}

/// Row-wise softmax of a 2-D tensor (1-D treated as a single row).
template <class S>
Var<S> softmax(const Var<S>& a) {
  const int m = a.ndim() == 2 ? a.dim(0) : 1;
  const int p = a.ndim() == 2 ? a.dim(1) : a.dim(0);
  std::vector<S> out(a.values());
  for (int i = 0; i < m; ++i) {
    S* row = out.data() + static_cast<int64_t>(i) * p;
    S mx = row[0];
    for (int j = 1; j < p; ++j) mx = std::max(mx, row[j]);
    S sum = S(0);
    for (int j = 0; j < p; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < p; ++j) row[j] /= sum;
  }
  auto node = detail::new_op_node<S>(
      "softmax", a.shape(), std::move(out), {a.sp()}, [m, p](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (int i = 0; i < m; ++i) {
          const S* y = n.value.data() + static_cast<int64_t>(i) * p;
          const S* g = n.grad.data() + static_cast<int64_t>(i) * p;
          S gy = S(0);
          for (int j = 0; j < p; ++j) gy += g[j] * y[j];
          S* ga = A.grad.data() + static_cast<int64_t>(i) * p;
          for (int j = 0; j < p; ++j) ga[j] += y[j] * (g[j] - gy);
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Row-wise layer normalization with learned gain/bias over the last axis.
template <class S>
Var<S> layer_norm(const Var<S>& a, const Var<S>& gain, const Var<S>& bias, double eps = 1e-5) {
  const int m = a.ndim() == 2 ? a.dim(0) : 1;
  const int p = a.ndim() == 2 ? a.dim(1) : a.dim(0);
  require(gain.ndim() == 1 && gain.dim(0) == p && bias.ndim() == 1 && bias.dim(0) == p,
          "layer_norm gain/bias must match the last axis");
  std::vector<S> out(a.values().size());
  auto xhat = std::make_shared<std::vector<S>>(a.values().size());
  auto inv_std = std::make_shared<std::vector<S>>(m);
  for (int i = 0; i < m; ++i) {
    const S* x = a.values().data() + static_cast<int64_t>(i) * p;
    S mu = S(0);
    for (int j = 0; j < p; ++j) mu += x[j];
    mu /= static_cast<S>(p);
    S var = S(0);
    for (int j = 0; j < p; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<S>(p);
    const S istd = S(1) / std::sqrt(var + static_cast<S>(eps));
    (*inv_std)[i] = istd;
    for (int j = 0; j < p; ++j) {
      const S xh = (x[j] - mu) * istd;
      (*xhat)[static_cast<int64_t>(i) * p + j] = xh;
      out[static_cast<int64_t>(i) * p + j] = gain.values()[j] * xh + bias.values()[j];
    }
  }
  auto node = detail::new_op_node<S>(
      "layer_norm", a.shape(), std::move(out),
      {a.sp(), gain.sp(), bias.sp()},
      [m, p, xhat, inv_std](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        auto& G = *n.parents[1];
        auto& B = *n.parents[2];
        for (int i = 0; i < m; ++i) {
          const S* g = n.grad.data() + static_cast<int64_t>(i) * p;
          const S* xh = xhat->data() + static_cast<int64_t>(i) * p;
          if (G.requires_grad) {
            G.ensure_grad();
            for (int j = 0; j < p; ++j) G.grad[j] += g[j] * xh[j];
          }
          if (B.requires_grad) {
            B.ensure_grad();
            for (int j = 0; j < p; ++j) B.grad[j] += g[j];
          }
          if (A.requires_grad) {
            A.ensure_grad();
            // dx = istd * (gy - mean(gy) - xhat * mean(gy*xhat)), gy = gain.*g
            S mean_gy = S(0), mean_gyx = S(0);
            for (int j = 0; j < p; ++j) {
              const S gy = G.value[j] * g[j];
              mean_gy += gy;
              mean_gyx += gy * xh[j];
            }
            mean_gy /= static_cast<S>(p);
            mean_gyx /= static_cast<S>(p);
            const S istd = (*inv_std)[i];
            S* ga = A.grad.data() + static_cast<int64_t>(i) * p;
            for (int j = 0; j < p; ++j) {
              const S gy = G.value[j] * g[j];
              ga[j] += istd * (gy - mean_gy - xh[j] * mean_gyx);
            }
          }
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Exact GELU: x * Phi(x).
template <class S>
Var<S> gelu(const Var<S>& a) {
  std::vector<S> out(a.values());
  for (auto& v : out) {
    const double x = static_cast<double>(v);
    v = static_cast<S>(x * 0.5 * (1.0 + std::erf(x * M_SQRT1_2)));
  }
  auto node = detail::new_op_node<S>(
      "gelu", a.shape(), std::move(out), {a.sp()}, [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) {
          const double x = static_cast<double>(A.value[i]);
          const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
          const double Phi = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
          A.grad[i] += n.grad[i] * static_cast<S>(Phi + x * phi);
        }
      });
  return Var<S>::from_node(std::move(node));
}

inline constexpr double kNormEps = 1e-12;  // guard added to every L2 norm

/// L2 normalization along the last axis (whole vector for 1-D, rows for 2-D).
template <class S>
Var<S> l2_normalize(const Var<S>& a) {
  const int m = a.ndim() == 2 ? a.dim(0) : 1;
  const int p = a.ndim() == 2 ? a.dim(1) : a.dim(0);
  std::vector<S> out(a.values());
  auto norms = std::make_shared<std::vector<S>>(m);
  for (int i = 0; i < m; ++i) {
    S* row = out.data() + static_cast<int64_t>(i) * p;
    S nsq = S(0);
    for (int j = 0; j < p; ++j) nsq += row[j] * row[j];
    const S nrm = std::sqrt(nsq);
    (*norms)[i] = nrm;
    const S denom = nrm + static_cast<S>(kNormEps);
    for (int j = 0; j < p; ++j) row[j] /= denom;
  }
  auto node = detail::new_op_node<S>(
      "l2_normalize", a.shape(), std::move(out), {a.sp()},
      [m, p, norms](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (int i = 0; i < m; ++i) {
          const S nrm = (*norms)[i];
          const S denom = nrm + static_cast<S>(kNormEps);
          const S* x = A.value.data() + static_cast<int64_t>(i) * p;
          const S* g = n.grad.data() + static_cast<int64_t>(i) * p;
          S* ga = A.grad.data() + static_cast<int64_t>(i) * p;
          if (nrm == S(0)) {
            // y = x/eps near the origin, so the Jacobian is I/eps.
            for (int j = 0; j < p; ++j) ga[j] += g[j] / denom;
            continue;
          }
          S gx = S(0);
          for (int j = 0; j < p; ++j) gx += g[j] * x[j];
          for (int j = 0; j < p; ++j) ga[j] += g[j] / denom - x[j] * gx / (nrm * denom * denom);
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Full contraction of two equal-shape tensors to a scalar.
template <class S>
Var<S> dot(const Var<S>& a, const Var<S>& b) {
  require(a.shape() == b.shape(), "dot shape mismatch");
  S acc = S(0);
  for (int64_t i = 0; i < a.size(); ++i) acc += a.values()[i] * b.values()[i];
  auto node = detail::new_op_node<S>(
      "dot", {1}, std::vector<S>{acc}, {a.sp(), b.sp()},
      [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        auto& B = *n.parents[1];
        const S g = n.grad[0];
        if (A.requires_grad) {
          A.ensure_grad();
          for (size_t i = 0; i < A.value.size(); ++i) A.grad[i] += g * B.value[i];
        }
        if (B.requires_grad) {
          B.ensure_grad();
          for (size_t i = 0; i < B.value.size(); ++i) B.grad[i] += g * A.value[i];
        }
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> exp(const Var<S>& a) {
  std::vector<S> out(a.values());
  for (auto& v : out) v = std::exp(v);
  auto node = detail::new_op_node<S>(
      "exp", a.shape(), std::move(out), {a.sp()}, [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) A.grad[i] += n.grad[i] * n.value[i];
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> log(const Var<S>& a) {
  std::vector<S> out(a.values());
  for (auto& v : out) v = std::log(v);
  auto node = detail::new_op_node<S>(
      "log", a.shape(), std::move(out), {a.sp()}, [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) A.grad[i] += n.grad[i] / A.value[i];
      });
  return Var<S>::from_node(std::move(node));
}

template <class S>
Var<S> abs_val(const Var<S>& a) {
  std::vector<S> out(a.values());
  for (auto& v : out) v = std::abs(v);
  auto node = detail::new_op_node<S>(
      "abs", a.shape(), std::move(out), {a.sp()}, [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        A.ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) {
          const S sign = A.value[i] > S(0) ? S(1) : (A.value[i] < S(0) ? S(-1) : S(0));
          A.grad[i] += n.grad[i] * sign;
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Elementwise division (shapes must match).
template <class S>
Var<S> divide(const Var<S>& a, const Var<S>& b) {
  require(a.shape() == b.shape(), "divide shape mismatch");
  std::vector<S> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] /= b.values()[i];
  auto node = detail::new_op_node<S>(
      "divide", a.shape(), std::move(out), {a.sp(), b.sp()},
      [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        auto& B = *n.parents[1];
        if (A.requires_grad) {
          A.ensure_grad();
          for (size_t i = 0; i < n.grad.size(); ++i) A.grad[i] += n.grad[i] / B.value[i];
        }
        if (B.requires_grad) {
          B.ensure_grad();
          for (size_t i = 0; i < n.grad.size(); ++i) B.grad[i] -= n.grad[i] * n.value[i] / B.value[i];
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// cos(a, b) with a kNormEps guard on each norm; both inputs 1-D.
template <class S>
Var<S> cosine_similarity(const Var<S>& a, const Var<S>& b) {
  require(a.ndim() == 1 && b.ndim() == 1 && a.dim(0) == b.dim(0), "cosine_similarity expects equal 1-D tensors");
  const int p = a.dim(0);
  S s = S(0), na = S(0), nb = S(0);
  for (int j = 0; j < p; ++j) {
    s += a.values()[j] * b.values()[j];
    na += a.values()[j] * a.values()[j];
    nb += b.values()[j] * b.values()[j];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  const S da = na + static_cast<S>(kNormEps);
  const S db = nb + static_cast<S>(kNormEps);
  const S c = s / (da * db);
  auto node = detail::new_op_node<S>(
      "cosine_similarity", {1}, std::vector<S>{c},
      {a.sp(), b.sp()}, [p, s, na, nb](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        auto& B = *n.parents[1];
        const S g = n.grad[0];
        const S da = na + static_cast<S>(kNormEps);
        const S db = nb + static_cast<S>(kNormEps);
        if (A.requires_grad) {
          A.ensure_grad();
          for (int j = 0; j < p; ++j) {
            S term = B.value[j] / (da * db);
            if (na > S(0)) term -= s * A.value[j] / (na * da * da * db);
            A.grad[j] += g * term;
          }
        }
        if (B.requires_grad) {
          B.ensure_grad();
          for (int j = 0; j < p; ++j) {
            S term = A.value[j] / (da * db);
            if (nb > S(0)) term -= s * B.value[j] / (nb * db * db * da);
            B.grad[j] += g * term;
          }
        }
      });
  return Var<S>::from_node(std::move(node));
}

/// Free reshape (shares no storage but copies; gradient is a plain copy back).
template <class S>
Var<S> reshape(const Var<S>& a, Shape shape) {
  require(shape_size(shape) == a.size(), "reshape element count mismatch");
  std::vector<S> out(a.values());
  auto node = detail::new_op_node<S>(
      "reshape", std::move(shape), std::move(out), {a.sp()}, [](detail::Node<S>& n) {
        auto& A = *n.parents[0];
        if (A.requires_grad) detail::accumulate(A, n.grad.data(), static_cast<int64_t>(n.grad.size()));
      });
  return Var<S>::from_node(std::move(node));
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

/// Leaf gradients reachable from one backward() call, keyed by node identity.
template <class S>
using GradMap = std::unordered_map<const void*, std::vector<S>>;

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
/// requires_grad node on the path; off-path leaves read as zero through
/// Var::grad(). A graph may be swept only once.
template <class S>
GradMap<S> backward(const Var<S>& loss) {
  using NodeT = detail::Node<S>;
  require(loss.size() == 1, "backward expects a scalar loss, got " + shape_str(loss.shape()));
  NodeT* root = loss.node();
  if (!root->requires_grad)
    throw ValidationError("backward: loss does not depend on any requires_grad tensor");

  // Iterative post-order topological sort over the requires_grad subgraph.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      NodeT* parent = node->parents[idx++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodeT* n : order)
    if (!n->is_leaf() && n->consumed)
      throw RuntimeError("backward: graph already consumed (single-shot graphs; rebuild the graph)");

  root->ensure_grad();
  root->grad[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (n->is_leaf()) continue;
    n->consumed = true;
    if (n->grad.empty()) continue;  // unreachable from the seed
    n->backprop(*n);
  }

  GradMap<S> grads;
  for (NodeT* n : order)
    if (n->is_leaf()) grads.emplace(n, n->grad.empty() ? std::vector<S>(n->value.size(), S(0)) : n->grad);
  return grads;
}

}  // namespace beam
