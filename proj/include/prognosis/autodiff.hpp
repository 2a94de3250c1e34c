// Copyright 2026 The eeg-prognosis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tape-based reverse-mode differentiation over dense tensors.
//
// A Graph records every op whose inputs require gradients, in creation order,
// so replaying the tape backwards is a valid reverse topological order. In
// Inference mode nothing is recorded and intermediate values are released as
// soon as the last Var referring to them goes away.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "prognosis/tensor.hpp"

namespace prognosis::ad {

class Graph;
struct Node;

/// Handle to a value in a Graph.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  std::size_t id() const;
  Graph& graph() const;
  explicit operator bool() const noexcept { return node_ != nullptr; }

 private:
  friend class Graph;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

/// Gradient buffers of an op's inputs, handed to its backward function.
class InputGrads {
 public:
  explicit InputGrads(std::span<const std::shared_ptr<Node>> inputs) : inputs_(inputs) {}

  std::size_t size() const noexcept { return inputs_.size(); }
  bool wants(std::size_t i) const;
  const Tensor& value(std::size_t i) const;
  /// Accumulation buffer for input i, zero-initialized on first use.
  Tensor& grad(std::size_t i);

 private:
  std::span<const std::shared_ptr<Node>> inputs_;
};

using BackwardFn =
    std::function<void(const Tensor& out_value, const Tensor& out_grad, InputGrads& inputs)>;

class Graph {
 public:
  enum class Mode { Record, Inference };

  explicit Graph(Mode mode = Mode::Record) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return mode_ == Mode::Record; }

  Var constant(Tensor value);
  /// Owned leaf that requires a gradient.
  Var variable(Tensor value);
  /// Borrowed leaf that requires a gradient. The tensor must outlive the graph
  /// and must not be mutated while the graph is alive.
  Var parameter(const Tensor& value);

  /// Creates an op node. The backward function is kept only when recording
  /// and at least one input requires a gradient. Throws NonFiniteValue when
  /// the forward value contains NaN or Inf.
  Var make(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  /// Reverse accumulation from a scalar loss. Throws NotScalarLoss.
  void backward(const Var& loss);

  /// Gradient of the last backward() w.r.t. v; zeros when v was unreachable.
  Tensor grad(const Var& v) const;

  std::size_t tape_size() const noexcept { return tape_.size(); }

 private:
  Var make_leaf(Tensor owned, const Tensor* borrowed, bool requires_grad);

  Mode mode_;
  std::size_t next_id_ = 0;
  std::vector<std::shared_ptr<Node>> tape_;
};

// ---- ops ------------------------------------------------------------------
// Shapes are checked on entry; mismatches throw ShapeMismatch. No op
// broadcasts except bias addition in conv1d and linear.

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
/// Sum of all elements, shape [1].
Var sum(const Var& x);
Var reshape(const Var& x, Shape shape);

/// [m x k] * [k x n].
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
/// Columns [start, start + count) of a 2-D tensor.
Var slice_cols(const Var& x, std::size_t start, std::size_t count);
/// Rows [start, start + count) of a 2-D tensor.
Var slice_rows(const Var& x, std::size_t start, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);

/// Valid cross-correlation. x [C_in x L], w [C_out x C_in x k], bias [C_out];
/// output [C_out x ((L - k) / stride + 1)].
Var conv1d(const Var& x, const Var& w, const Var& bias, std::size_t stride);
/// Per-row standardization of x [C x L] with 1/L variance, then gain/shift
/// per row.
Var instance_norm(const Var& x, const Var& gain, const Var& shift, double eps);
/// Standardization over the last axis, then gain/shift per column.
Var layer_norm(const Var& x, const Var& gain, const Var& shift, double eps);
/// x * Phi(x), exact erf form.
Var gelu(const Var& x);
Var sigmoid(const Var& x);
/// Last-axis softmax with max subtraction.
Var softmax(const Var& x);
/// Affine map over the last axis. x [... x d_in], w [d_in x d_out], b [d_out].
Var linear(const Var& x, const Var& w, const Var& b);

/// Mean binary cross-entropy; probabilities are clamped to
/// [kProbClamp, 1 - kProbClamp] before the log. Throws EmptyBatch.
inline constexpr double kProbClamp = 1e-7;
Var binary_cross_entropy(const Var& probs, std::span<const double> labels);
/// Mean squared error. Throws EmptyBatch.
Var mean_squared_error(const Var& preds, std::span<const double> targets);

// ---- plain-value helpers shared with non-differentiated code ---------------

double gelu_value(double x) noexcept;
double gelu_derivative(double x) noexcept;
double sigmoid_value(double x) noexcept;

}  // namespace prognosis::ad
