// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "protofuse/error.hpp"

namespace protofuse {

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_zero_norm_events{0};

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

struct Dims2 {
  std::size_t rows;
  std::size_t cols;
};

Dims2 dims2(const Shape& shape) {
  switch (shape.size()) {
    case 0: return {1, 1};
    case 1: return {1, shape[0]};
    case 2: return {shape[0], shape[1]};
    default: fail(ErrorCategory::invalid_argument, "tensors above rank 2 are not supported");
  }
}

Shape matrix_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      fail(ErrorCategory::numeric, std::string("non-finite value produced by ") + op);
    }
  }
}

}  // namespace

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

// Builds op results and wires them into the graph.
struct OpAccess {
  static const NodePtr& node(const Tensor& t) {
    require(t.defined(), ErrorCategory::invalid_argument, "operation on an undefined tensor");
    return t.node_;
  }

  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }

  static Tensor make(const char* op, Shape shape, std::vector<double> value,
                     std::initializer_list<const Tensor*> inputs,
                     std::function<void(Node&)> backward) {
    check_finite(value, op);
    auto out = std::make_shared<Node>();
    out->shape = std::move(shape);
    out->value = std::move(value);
    out->leaf = false;
    out->op = op;
    if (g_grad_enabled) {
      bool any = false;
      for (const Tensor* in : inputs) any = any || node(*in)->requires_grad;
      if (any) {
        out->requires_grad = true;
        for (const Tensor* in : inputs) out->parents.push_back(node(*in));
        out->backward = std::move(backward);
      }
    }
    return Tensor(std::move(out));
  }

  static Tensor make_list(const char* op, Shape shape, std::vector<double> value,
                          const std::vector<Tensor>& inputs,
                          std::function<void(Node&)> backward) {
    check_finite(value, op);
    auto out = std::make_shared<Node>();
    out->shape = std::move(shape);
    out->value = std::move(value);
    out->leaf = false;
    out->op = op;
    if (g_grad_enabled) {
      bool any = false;
      for (const Tensor& in : inputs) any = any || node(in)->requires_grad;
      if (any) {
        out->requires_grad = true;
        for (const Tensor& in : inputs) out->parents.push_back(node(in));
        out->backward = std::move(backward);
      }
    }
    return Tensor(std::move(out));
  }
};

std::size_t shape_numel(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  require(shape.size() <= 2, ErrorCategory::invalid_argument, "tensors above rank 2 are not supported");
  for (std::size_t d : shape) {
    require(d > 0, ErrorCategory::invalid_argument, "tensor dimensions must be positive");
  }
  require(shape_numel(shape) == values.size(), ErrorCategory::invalid_argument,
          "shape " + shape_to_string(shape) + " does not match " + std::to_string(values.size()) +
              " values");
  check_finite(values, "tensor construction");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

Tensor Tensor::vector(std::span<const double> values) {
  return from({values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return from({rows, cols}, std::move(values));
}

Tensor Tensor::stack(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), ErrorCategory::invalid_argument, "cannot stack zero rows");
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    require(r.size() == cols, ErrorCategory::invalid_argument, "ragged rows in stack");
    values.insert(values.end(), r.begin(), r.end());
  }
  return matrix(rows.size(), cols, std::move(values));
}

const Shape& Tensor::shape() const { return OpAccess::node(*this)->shape; }
std::size_t Tensor::rows() const { return dims2(shape()).rows; }
std::size_t Tensor::cols() const { return dims2(shape()).cols; }

std::span<const double> Tensor::values() const { return OpAccess::node(*this)->value; }

std::span<double> Tensor::mutable_values() {
  const auto& n = OpAccess::node(*this);
  require(n->leaf, ErrorCategory::invalid_state, "only leaf tensors expose mutable values");
  return n->value;
}

double Tensor::item() const {
  const auto v = values();
  require(v.size() == 1, ErrorCategory::invalid_argument, "item() on a non-scalar tensor");
  return v[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require(r < rows() && c < cols(), ErrorCategory::invalid_argument, "index out of range");
  return values()[r * cols() + c];
}

std::vector<double> Tensor::row(std::size_t r) const {
  require(r < rows(), ErrorCategory::invalid_argument, "row index out of range");
  const auto v = values();
  const std::size_t c = cols();
  return {v.begin() + static_cast<std::ptrdiff_t>(r * c),
          v.begin() + static_cast<std::ptrdiff_t>((r + 1) * c)};
}

std::vector<std::vector<double>> Tensor::to_rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) out.push_back(row(r));
  return out;
}

bool Tensor::requires_grad() const { return OpAccess::node(*this)->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  const auto& n = OpAccess::node(*this);
  require(n->leaf, ErrorCategory::invalid_state, "requires_grad can only be toggled on leaves");
  n->requires_grad = flag;
  if (!flag) n->grad.clear();
}

bool Tensor::has_grad() const { return !OpAccess::node(*this)->grad.empty(); }
std::span<const double> Tensor::grad() const { return OpAccess::node(*this)->grad; }
void Tensor::clear_grad() { OpAccess::node(*this)->grad.clear(); }

void Tensor::backward() const {
  const auto& root = OpAccess::node(*this);
  require(root->value.size() == 1, ErrorCategory::invalid_argument,
          "backward() needs a scalar loss, got shape " + shape_to_string(root->shape));
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (Node* n : order) {
    if (n->leaf) check_finite(n->grad, "backward");
  }
}

Tensor Tensor::detached_copy() const {
  const auto& n = OpAccess::node(*this);
  return from(n->shape, n->value, false);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_mode_enabled() noexcept { return g_grad_enabled; }

std::uint64_t zero_norm_events() noexcept { return g_zero_norm_events.load(); }
void reset_zero_norm_events() noexcept { g_zero_norm_events.store(0); }

// ---------------------------------------------------------------------------
// Elementwise binary ops with 2-D broadcasting

namespace {

struct Broadcast {
  Dims2 a, b, out;
  Shape shape;

  std::size_t ia(std::size_t r, std::size_t c) const {
    return (a.rows == 1 ? 0 : r) * a.cols + (a.cols == 1 ? 0 : c);
  }
  std::size_t ib(std::size_t r, std::size_t c) const {
    return (b.rows == 1 ? 0 : r) * b.cols + (b.cols == 1 ? 0 : c);
  }
};

Broadcast broadcast(const Shape& sa, const Shape& sb, const char* op) {
  Broadcast bc{dims2(sa), dims2(sb), {}, {}};
  auto merge = [&](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    fail(ErrorCategory::invalid_argument, std::string(op) + ": incompatible shapes " +
                                              shape_to_string(sa) + " and " + shape_to_string(sb));
  };
  bc.out = {merge(bc.a.rows, bc.b.rows), merge(bc.a.cols, bc.b.cols)};
  const std::size_t rank = std::max(sa.size(), sb.size());
  if (rank == 2 || bc.out.rows > 1) {
    bc.shape = matrix_shape(bc.out.rows, bc.out.cols);
  } else if (rank == 1) {
    bc.shape = Shape{bc.out.cols};
  }
  return bc;
}

enum class BinaryKind { add, sub, mul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* op) {
  const auto bc = broadcast(a.shape(), b.shape(), op);
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(bc.out.rows * bc.out.cols);
  for (std::size_t r = 0; r < bc.out.rows; ++r) {
    for (std::size_t c = 0; c < bc.out.cols; ++c) {
      const double x = va[bc.ia(r, c)];
      const double y = vb[bc.ib(r, c)];
      double v = 0.0;
      switch (kind) {
        case BinaryKind::add: v = x + y; break;
        case BinaryKind::sub: v = x - y; break;
        case BinaryKind::mul: v = x * y; break;
      }
      out[r * bc.out.cols + c] = v;
    }
  }
  return OpAccess::make(op, bc.shape, std::move(out), {&a, &b}, [bc, kind](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& g = self.grad;
    for (std::size_t r = 0; r < bc.out.rows; ++r) {
      for (std::size_t c = 0; c < bc.out.cols; ++c) {
        const double gv = g[r * bc.out.cols + c];
        const std::size_t ia = bc.ia(r, c);
        const std::size_t ib = bc.ib(r, c);
        if (pa.requires_grad) {
          pa.ensure_grad()[ia] += kind == BinaryKind::mul ? gv * pb.value[ib] : gv;
        }
        if (pb.requires_grad) {
          double d = gv;
          if (kind == BinaryKind::sub) d = -gv;
          if (kind == BinaryKind::mul) d = gv * pa.value[ia];
          pb.ensure_grad()[ib] += d;
        }
      }
    }
  });
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  const auto va = a.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = fwd(va[i]);
  return OpAccess::make(op, a.shape(), std::move(out), {&a}, [deriv](Node& self) {
    Node& p = *self.parents[0];
    auto& gp = p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gp[i] += self.grad[i] * deriv(p.value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::mul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(a, "scale", [factor](double x) { return x * factor; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, "add_scalar", [value](double x) { return x + value; },
               [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    require(v > 0.0, ErrorCategory::numeric, "log of a non-positive value");
  }
  return unary(a, "log", [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Tensor clamp_min(const Tensor& a, double floor) {
  return unary(a, "clamp_min", [floor](double x) { return x < floor ? floor : x; },
               [floor](double x, double) { return x < floor ? 0.0 : 1.0; });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Dims2 da = dims2(a.shape());
  const Dims2 db = dims2(b.shape());
  require(da.cols == db.rows, ErrorCategory::invalid_argument,
          "matmul: inner dimensions differ (" + shape_to_string(a.shape()) + " x " +
              shape_to_string(b.shape()) + ")");
  const std::size_t m = da.rows, k = da.cols, n = db.cols;
  const auto va = a.values();
  const auto vb = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = va[i * k + p];
      if (x == 0.0) continue;
      const double* brow = vb.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  }
  return OpAccess::make("matmul", matrix_shape(m, n), std::move(out), {&a, &b},
                        [m, k, n](Node& self) {
                          Node& pa = *self.parents[0];
                          Node& pb = *self.parents[1];
                          const auto& g = self.grad;
                          if (pa.requires_grad) {
                            auto& ga = pa.ensure_grad();
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t p = 0; p < k; ++p) {
                                double acc = 0.0;
                                for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb.value[p * n + j];
                                ga[i * k + p] += acc;
                              }
                            }
                          }
                          if (pb.requires_grad) {
                            auto& gb = pb.ensure_grad();
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t p = 0; p < k; ++p) {
                                const double x = pa.value[i * k + p];
                                if (x == 0.0) continue;
                                for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += x * g[i * n + j];
                              }
                            }
                          }
                        });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Dims2 dx = dims2(x.shape());
  require(weight.rank() == 2, ErrorCategory::invalid_argument, "linear: weight must be rank 2");
  const std::size_t out_dim = weight.shape()[0];
  const std::size_t in_dim = weight.shape()[1];
  require(dx.cols == in_dim, ErrorCategory::invalid_argument,
          "linear: input width " + std::to_string(dx.cols) + " does not match weight " +
              shape_to_string(weight.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) {
    require(bias.numel() == out_dim, ErrorCategory::invalid_argument,
            "linear: bias length does not match output width");
  }
  const std::size_t m = dx.rows;
  const auto vx = x.values();
  const auto vw = weight.values();
  std::vector<double> out(m * out_dim);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = vx.data() + i * in_dim;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* wo = vw.data() + o * in_dim;
      double acc = has_bias ? bias.values()[o] : 0.0;
      for (std::size_t p = 0; p < in_dim; ++p) acc += xi[p] * wo[p];
      out[i * out_dim + o] = acc;
    }
  }
  Shape shape = x.rank() == 2 ? matrix_shape(m, out_dim) : Shape{out_dim};
  auto backward = [m, in_dim, out_dim, has_bias](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    const auto& g = self.grad;
    if (px.requires_grad) {
      auto& gx = px.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double* gxi = gx.data() + i * in_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double go = g[i * out_dim + o];
          if (go == 0.0) continue;
          const double* wo = pw.value.data() + o * in_dim;
          for (std::size_t p = 0; p < in_dim; ++p) gxi[p] += go * wo[p];
        }
      }
    }
    if (pw.requires_grad) {
      auto& gw = pw.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* xi = px.value.data() + i * in_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double go = g[i * out_dim + o];
          if (go == 0.0) continue;
          double* gwo = gw.data() + o * in_dim;
          for (std::size_t p = 0; p < in_dim; ++p) gwo[p] += go * xi[p];
        }
      }
    }
    if (has_bias && self.parents[2]->requires_grad) {
      auto& gb = self.parents[2]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g[i * out_dim + o];
      }
    }
  };
  if (has_bias) {
    return OpAccess::make("linear", std::move(shape), std::move(out), {&x, &weight, &bias},
                          std::move(backward));
  }
  return OpAccess::make("linear", std::move(shape), std::move(out), {&x, &weight},
                        std::move(backward));
}

Tensor transpose(const Tensor& a) {
  const Dims2 d = dims2(a.shape());
  const auto va = a.values();
  std::vector<double> out(va.size());
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) out[c * d.rows + r] = va[r * d.cols + c];
  }
  return OpAccess::make("transpose", matrix_shape(d.cols, d.rows), std::move(out), {&a},
                        [d](Node& self) {
                          auto& gp = self.parents[0]->ensure_grad();
                          for (std::size_t r = 0; r < d.rows; ++r) {
                            for (std::size_t c = 0; c < d.cols; ++c) {
                              gp[r * d.cols + c] += self.grad[c * d.rows + r];
                            }
                          }
                        });
}

// ---------------------------------------------------------------------------
// Structural ops

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorCategory::invalid_argument, "concat_rows of nothing");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require(p.cols() == cols, ErrorCategory::invalid_argument, "concat_rows: column counts differ");
    offsets.push_back(rows * cols);
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return OpAccess::make_list("concat_rows", matrix_shape(rows, cols), std::move(out), parts,
                             [offsets](Node& self) {
                               for (std::size_t i = 0; i < self.parents.size(); ++i) {
                                 Node& p = *self.parents[i];
                                 if (!p.requires_grad) continue;
                                 auto& gp = p.ensure_grad();
                                 for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += self.grad[offsets[i] + j];
                               }
                             });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorCategory::invalid_argument, "concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> col_offsets, widths;
  for (const auto& p : parts) {
    require(p.rows() == rows, ErrorCategory::invalid_argument, "concat_cols: row counts differ");
    col_offsets.push_back(cols);
    widths.push_back(p.cols());
    cols += p.cols();
  }
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto v = parts[i].values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * widths[i]), widths[i],
                  out.begin() + static_cast<std::ptrdiff_t>(r * cols + col_offsets[i]));
    }
  }
  const bool rank1 = rows == 1 && std::all_of(parts.begin(), parts.end(),
                                              [](const Tensor& t) { return t.rank() <= 1; });
  Shape shape = rank1 ? Shape{cols} : matrix_shape(rows, cols);
  return OpAccess::make_list("concat_cols", std::move(shape), std::move(out), parts,
                             [rows, cols, col_offsets, widths](Node& self) {
                               for (std::size_t i = 0; i < self.parents.size(); ++i) {
                                 Node& p = *self.parents[i];
                                 if (!p.requires_grad) continue;
                                 auto& gp = p.ensure_grad();
                                 for (std::size_t r = 0; r < rows; ++r) {
                                   for (std::size_t c = 0; c < widths[i]; ++c) {
                                     gp[r * widths[i] + c] += self.grad[r * cols + col_offsets[i] + c];
                                   }
                                 }
                               }
                             });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorCategory::invalid_argument, "gather_rows with no indices");
  const Dims2 d = dims2(table.shape());
  const auto vt = table.values();
  std::vector<double> out;
  out.reserve(indices.size() * d.cols);
  for (std::size_t idx : indices) {
    require(idx < d.rows, ErrorCategory::invalid_argument,
            "gather_rows: index " + std::to_string(idx) + " outside " + std::to_string(d.rows) + " rows");
    out.insert(out.end(), vt.begin() + static_cast<std::ptrdiff_t>(idx * d.cols),
               vt.begin() + static_cast<std::ptrdiff_t>((idx + 1) * d.cols));
  }
  std::vector<std::size_t> ids(indices.begin(), indices.end());
  return OpAccess::make("gather_rows", matrix_shape(ids.size(), d.cols), std::move(out), {&table},
                        [ids, cols = d.cols](Node& self) {
                          auto& gp = self.parents[0]->ensure_grad();
                          for (std::size_t r = 0; r < ids.size(); ++r) {
                            for (std::size_t c = 0; c < cols; ++c) gp[ids[r] * cols + c] += self.grad[r * cols + c];
                          }
                        });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  const auto va = a.values();
  double acc = 0.0;
  for (double v : va) acc += v;
  return OpAccess::make("sum", {}, {acc}, {&a}, [](Node& self) {
    auto& gp = self.parents[0]->ensure_grad();
    for (double& g : gp) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum_rows(const Tensor& a) {
  const Dims2 d = dims2(a.shape());
  const auto va = a.values();
  std::vector<double> out(d.cols, 0.0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) out[c] += va[r * d.cols + c];
  }
  Shape shape = a.rank() == 2 ? matrix_shape(1, d.cols) : a.shape();
  return OpAccess::make("sum_rows", std::move(shape), std::move(out), {&a}, [d](Node& self) {
    auto& gp = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < d.rows; ++r) {
      for (std::size_t c = 0; c < d.cols; ++c) gp[r * d.cols + c] += self.grad[c];
    }
  });
}

Tensor mean_rows(const Tensor& a) {
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

// ---------------------------------------------------------------------------
// Classifier primitives

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  const Dims2 da = dims2(a.shape());
  const Dims2 db = dims2(b.shape());
  require(da.cols == db.cols, ErrorCategory::invalid_argument,
          "cosine_rows: feature widths differ (" + shape_to_string(a.shape()) + " vs " +
              shape_to_string(b.shape()) + ")");
  const std::size_t m = da.rows, n = db.rows, d = da.cols;
  const auto va = a.values();
  const auto vb = b.values();
  auto norms = [d](std::span<const double> v, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += v[i * d + k] * v[i * d + k];
      out[i] = std::sqrt(s);
    }
    return out;
  };
  std::vector<double> na = norms(va, m);
  std::vector<double> nb = norms(vb, n);
  std::uint64_t zero_rows = 0;
  for (double x : na) zero_rows += x == 0.0;
  for (double x : nb) zero_rows += x == 0.0;
  if (zero_rows) g_zero_norm_events.fetch_add(zero_rows);

  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (na[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (nb[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += va[i * d + k] * vb[j * d + k];
      out[i * n + j] = dot / (na[i] * nb[j]);
    }
  }
  return OpAccess::make(
      "cosine_rows", matrix_shape(m, n), std::move(out), {&a, &b},
      [m, n, d, na = std::move(na), nb = std::move(nb)](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const auto& g = self.grad;
        const auto& c = self.value;
        std::vector<double>* ga = pa.requires_grad ? &pa.ensure_grad() : nullptr;
        std::vector<double>* gb = pb.requires_grad ? &pb.ensure_grad() : nullptr;
        for (std::size_t i = 0; i < m; ++i) {
          if (na[i] == 0.0) continue;
          const double* ai = pa.value.data() + i * d;
          for (std::size_t j = 0; j < n; ++j) {
            if (nb[j] == 0.0) continue;
            const double gij = g[i * n + j];
            if (gij == 0.0) continue;
            const double* bj = pb.value.data() + j * d;
            const double cij = c[i * n + j];
            const double inv = 1.0 / (na[i] * nb[j]);
            if (ga) {
              const double sa = cij / (na[i] * na[i]);
              for (std::size_t k = 0; k < d; ++k) (*ga)[i * d + k] += gij * (bj[k] * inv - sa * ai[k]);
            }
            if (gb) {
              const double sb = cij / (nb[j] * nb[j]);
              for (std::size_t k = 0; k < d; ++k) (*gb)[j * d + k] += gij * (ai[k] * inv - sb * bj[k]);
            }
          }
        }
      });
}

namespace {

void require_temperature(double temperature) {
  require(std::isfinite(temperature) && temperature > 0.0, ErrorCategory::invalid_argument,
          "temperature must be a positive finite number");
}

}  // namespace

Tensor softmax_rows(const Tensor& logits, double temperature) {
  require_temperature(temperature);
  const Dims2 d = dims2(logits.shape());
  const auto v = logits.values();
  std::vector<double> out(v.size());
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* x = v.data() + r * d.cols;
    const double mx = *std::max_element(x, x + d.cols);
    double z = 0.0;
    for (std::size_t c = 0; c < d.cols; ++c) {
      out[r * d.cols + c] = std::exp((x[c] - mx) / temperature);
      z += out[r * d.cols + c];
    }
    for (std::size_t c = 0; c < d.cols; ++c) out[r * d.cols + c] /= z;
  }
  return OpAccess::make("softmax_rows", logits.shape(), std::move(out), {&logits},
                        [d, temperature](Node& self) {
                          auto& gp = self.parents[0]->ensure_grad();
                          for (std::size_t r = 0; r < d.rows; ++r) {
                            const double* s = self.value.data() + r * d.cols;
                            const double* g = self.grad.data() + r * d.cols;
                            double dot = 0.0;
                            for (std::size_t c = 0; c < d.cols; ++c) dot += g[c] * s[c];
                            for (std::size_t c = 0; c < d.cols; ++c) {
                              gp[r * d.cols + c] += s[c] * (g[c] - dot) / temperature;
                            }
                          }
                        });
}

Tensor log_softmax_rows(const Tensor& logits, double temperature) {
  require_temperature(temperature);
  const Dims2 d = dims2(logits.shape());
  const auto v = logits.values();
  std::vector<double> out(v.size());
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* x = v.data() + r * d.cols;
    const double mx = *std::max_element(x, x + d.cols);
    double z = 0.0;
    for (std::size_t c = 0; c < d.cols; ++c) z += std::exp((x[c] - mx) / temperature);
    const double lse = std::log(z);
    for (std::size_t c = 0; c < d.cols; ++c) out[r * d.cols + c] = (x[c] - mx) / temperature - lse;
  }
  return OpAccess::make("log_softmax_rows", logits.shape(), std::move(out), {&logits},
                        [d, temperature](Node& self) {
                          auto& gp = self.parents[0]->ensure_grad();
                          for (std::size_t r = 0; r < d.rows; ++r) {
                            const double* y = self.value.data() + r * d.cols;
                            const double* g = self.grad.data() + r * d.cols;
                            double gsum = 0.0;
                            for (std::size_t c = 0; c < d.cols; ++c) gsum += g[c];
                            for (std::size_t c = 0; c < d.cols; ++c) {
                              gp[r * d.cols + c] += (g[c] - std::exp(y[c]) * gsum) / temperature;
                            }
                          }
                        });
}

Tensor nll_mean(const Tensor& log_probs, std::span<const std::size_t> labels) {
  const Dims2 d = dims2(log_probs.shape());
  require(labels.size() == d.rows, ErrorCategory::invalid_argument,
          "nll_mean: one label per row required");
  const auto v = log_probs.values();
  double acc = 0.0;
  for (std::size_t r = 0; r < d.rows; ++r) {
    require(labels[r] < d.cols, ErrorCategory::invalid_argument,
            "label " + std::to_string(labels[r]) + " out of range for " + std::to_string(d.cols) +
                " classes");
    acc -= v[r * d.cols + labels[r]];
  }
  const double inv = 1.0 / static_cast<double>(d.rows);
  std::vector<std::size_t> ids(labels.begin(), labels.end());
  return OpAccess::make("nll_mean", {}, {acc * inv}, {&log_probs}, [d, ids, inv](Node& self) {
    auto& gp = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < d.rows; ++r) gp[r * d.cols + ids[r]] -= self.grad[0] * inv;
  });
}

Tensor kl_rows_mean(const Tensor& p, const Tensor& q, double floor) {
  require(p.shape() == q.shape(), ErrorCategory::invalid_argument,
          "kl: shapes differ (" + shape_to_string(p.shape()) + " vs " + shape_to_string(q.shape()) + ")");
  require(floor > 0.0, ErrorCategory::invalid_argument, "kl: floor must be positive");
  const Dims2 d = dims2(p.shape());
  const auto vp = p.values();
  const auto vq = q.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    require(vp[i] >= 0.0 && vq[i] >= 0.0, ErrorCategory::invalid_argument,
            "kl: probabilities must be non-negative");
    if (vp[i] == 0.0) continue;
    acc += vp[i] * (std::log(vp[i]) - std::log(std::max(vq[i], floor)));
  }
  const double inv = 1.0 / static_cast<double>(d.rows);
  return OpAccess::make("kl_rows_mean", {}, {acc * inv}, {&p, &q}, [inv, floor](Node& self) {
    Node& pp = *self.parents[0];
    Node& pq = *self.parents[1];
    const double g = self.grad[0] * inv;
    for (std::size_t i = 0; i < pp.value.size(); ++i) {
      const double pi = pp.value[i];
      if (pi == 0.0) continue;
      const double qi = pq.value[i];
      const double qc = std::max(qi, floor);
      if (pp.requires_grad) pp.ensure_grad()[i] += g * (std::log(pi) - std::log(qc) + 1.0);
      if (pq.requires_grad && qi > floor) pq.ensure_grad()[i] -= g * pi / qi;
    }
  });
}

}  // namespace protofuse
