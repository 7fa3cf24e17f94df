// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace protofuse {

/// Dimension sizes, outermost first. Rank 0 is a scalar, rank 1 a row
/// vector, rank 2 a matrix; every op in this library works on ranks 0-2.
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Handle to a node of the differentiation graph.
///
/// Copies share the node. Values are immutable once an op has produced them;
/// only leaves expose mutable storage (parameters and the optimizer need it).
/// The graph is rebuilt on every forward pass: intermediate nodes are owned
/// by the tensors that consume them and die with the loss handle, while leaf
/// gradients accumulate until ParamStore::zero_grad() clears them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor vector(std::span<const double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  /// Stack equal-length rows into a matrix constant.
  static Tensor stack(const std::vector<std::vector<double>>& rows);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const { return values().size(); }
  /// Matrix view of the shape: rank 0 is 1x1, rank 1 is 1xn.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> row(std::size_t r) const;
  std::vector<std::vector<double>> to_rows() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  void clear_grad();

  /// Reverse-mode sweep from a scalar; throws invalid_argument otherwise.
  void backward() const;

  /// Fresh leaf holding a copy of the values, detached from any graph.
  Tensor detached_copy() const;
  const detail::Node* identity() const noexcept { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct OpAccess;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled() noexcept;

// Differentiable primitives. Binary elementwise ops broadcast 2-D shapes
// numpy-style (each dimension equal or 1).

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
/// Natural log; every input must be strictly positive.
Tensor log(const Tensor& a);
Tensor clamp_min(const Tensor& a, double floor);

Tensor matmul(const Tensor& a, const Tensor& b);
/// x * weight^T + bias with weight shaped (out, in); bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor transpose(const Tensor& a);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Column-wise mean over rows; returns shape {1, cols} (rank-1 input unchanged).
Tensor mean_rows(const Tensor& a);
Tensor sum_rows(const Tensor& a);

/// Pairwise cosine similarity between the rows of a (m x d) and b (n x d).
/// A zero-norm row yields similarity 0 and bumps zero_norm_events().
Tensor cosine_rows(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& logits, double temperature);
Tensor log_softmax_rows(const Tensor& logits, double temperature);
/// Mean over rows of -log_probs[i, labels[i]].
Tensor nll_mean(const Tensor& log_probs, std::span<const std::size_t> labels);

inline constexpr double kKlFloor = 1e-12;
/// Mean over rows of sum_j p_ij * (ln p_ij - ln max(q_ij, floor)); 0*ln 0 = 0.
Tensor kl_rows_mean(const Tensor& p, const Tensor& q, double floor = kKlFloor);

/// Count of zero-norm vectors seen by any cosine computation in this process.
std::uint64_t zero_norm_events() noexcept;
void reset_zero_norm_events() noexcept;

}  // namespace protofuse
