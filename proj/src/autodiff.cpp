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

#include "prognosis/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "prognosis/error.hpp"

namespace prognosis::ad {

struct Node {
  std::size_t id = 0;
  Graph* graph = nullptr;
  Tensor owned;
  const Tensor* borrowed = nullptr;
  bool requires_grad = false;
  Tensor grad;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  const Tensor& value() const { return borrowed ? *borrowed : owned; }
  Tensor& grad_buffer() {
    if (grad.empty()) grad = Tensor(value().shape());
    return grad;
  }
};

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

MatMap as_mat(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
ConstMatMap as_mat(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw Error(ErrorCode::ShapeMismatch, op + ": " + detail);
}

void require_rank(const std::string& op, const Var& v, std::size_t rank) {
  if (v.value().rank() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " + shape_str(v.shape()));
  }
}

void require_same_shape(const std::string& op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    shape_error(op, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_size(const std::string& op, const Var& v, std::size_t n, const char* what) {
  if (v.value().rank() != 1 || v.size() != n) {
    shape_error(op, std::string(what) + " must have shape [" + std::to_string(n) + "], got " +
                        shape_str(v.shape()));
  }
}

}  // namespace

// ---- Var / InputGrads --------------------------------------------------------

const Tensor& Var::value() const { return node_->value(); }
bool Var::requires_grad() const { return node_->requires_grad; }
std::size_t Var::id() const { return node_->id; }
Graph& Var::graph() const { return *node_->graph; }

bool InputGrads::wants(std::size_t i) const { return inputs_[i]->requires_grad; }
const Tensor& InputGrads::value(std::size_t i) const { return inputs_[i]->value(); }
Tensor& InputGrads::grad(std::size_t i) { return inputs_[i]->grad_buffer(); }

// ---- Graph -------------------------------------------------------------------

Var Graph::make_leaf(Tensor owned, const Tensor* borrowed, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->id = next_id_++;
  node->graph = this;
  node->owned = std::move(owned);
  node->borrowed = borrowed;
  node->requires_grad = requires_grad && recording();
  if (!node->value().all_finite()) {
    throw Error(ErrorCode::NonFiniteValue, "leaf value contains NaN or Inf");
  }
  if (node->requires_grad) tape_.push_back(node);
  return Var(std::move(node));
}

Var Graph::constant(Tensor value) { return make_leaf(std::move(value), nullptr, false); }
Var Graph::variable(Tensor value) { return make_leaf(std::move(value), nullptr, true); }
Var Graph::parameter(const Tensor& value) { return make_leaf(Tensor(), &value, true); }

Var Graph::make(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw Error(ErrorCode::NonFiniteValue, "op produced NaN or Inf");
  }
  auto node = std::make_shared<Node>();
  node->id = next_id_++;
  node->graph = this;
  node->owned = std::move(value);
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.node_->graph != this) shape_error("graph", "input belongs to a different graph");
    needs = needs || in.node_->requires_grad;
  }
  if (recording() && needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (Var& in : inputs) node->inputs.push_back(std::move(in.node_));
    node->backward = std::move(backward);
    tape_.push_back(node);
  }
  return Var(std::move(node));
}

void Graph::backward(const Var& loss) {
  if (loss.size() != 1) {
    throw Error(ErrorCode::NotScalarLoss, "loss has shape " + shape_str(loss.shape()));
  }
  for (auto& node : tape_) node->grad = Tensor();
  if (!loss.node_->requires_grad) return;
  loss.node_->grad_buffer()[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node& node = **it;
    if (!node.backward || node.grad.empty()) continue;
    InputGrads grads(node.inputs);
    node.backward(node.value(), node.grad, grads);
  }
}

Tensor Graph::grad(const Var& v) const {
  if (v.node_->grad.empty()) return Tensor(v.shape());
  return v.node_->grad;
}

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.graph().make(std::move(out), {a, b}, [](const Tensor&, const Tensor& g, InputGrads& in) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!in.wants(k)) continue;
      Tensor& dst = in.grad(k);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph().make(std::move(out), {a, b}, [](const Tensor&, const Tensor& g, InputGrads& in) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!in.wants(k)) continue;
      const Tensor& other = in.value(1 - k);
      Tensor& dst = in.grad(k);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  return x.graph().make(std::move(out), {x},
                        [factor](const Tensor&, const Tensor& g, InputGrads& in) {
                          Tensor& dst = in.grad(0);
                          for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
                        });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return x.graph().make(Tensor::scalar(total), {x},
                        [](const Tensor&, const Tensor& g, InputGrads& in) {
                          Tensor& dst = in.grad(0);
                          for (double& v : dst.values()) v += g[0];
                        });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.graph().make(std::move(out), {x}, [](const Tensor&, const Tensor& g, InputGrads& in) {
    Tensor& dst = in.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

double gelu_value(double x) noexcept {
  return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
}

double gelu_derivative(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

double sigmoid_value(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var gelu(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = gelu_value(v);
  return x.graph().make(std::move(out), {x}, [](const Tensor&, const Tensor& g, InputGrads& in) {
    const Tensor& xv = in.value(0);
    Tensor& dst = in.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * gelu_derivative(xv[i]);
  });
}

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = sigmoid_value(v);
  return x.graph().make(std::move(out), {x}, [](const Tensor& y, const Tensor& g, InputGrads& in) {
    Tensor& dst = in.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(const Var& x) {
  if (x.value().rank() == 0 || x.size() == 0) shape_error("softmax", "empty input");
  Tensor out = x.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      total += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= total;
  }
  return x.graph().make(std::move(out), {x}, [](const Tensor& y, const Tensor& g, InputGrads& in) {
    Tensor& dst = in.grad(0);
    const std::size_t rows = y.rows(), cols = y.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[base + c] * y[base + c];
      for (std::size_t c = 0; c < cols; ++c) dst[base + c] += y[base + c] * (g[base + c] - dot);
    }
  });
}

// ---- matrix ops --------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    shape_error("matmul", shape_str(a.shape()) + " * " + shape_str(b.shape()));
  }
  Tensor out({m, n});
  as_mat(out, m, n).noalias() = as_mat(a.value(), m, k) * as_mat(b.value(), k, n);
  return a.graph().make(std::move(out), {a, b},
                        [m, k, n](const Tensor&, const Tensor& g, InputGrads& in) {
                          const auto gm = as_mat(g, m, n);
                          if (in.wants(0)) {
                            as_mat(in.grad(0), m, k).noalias() +=
                                gm * as_mat(in.value(1), k, n).transpose();
                          }
                          if (in.wants(1)) {
                            as_mat(in.grad(1), k, n).noalias() +=
                                as_mat(in.value(0), m, k).transpose() * gm;
                          }
                        });
}

Var transpose(const Var& x) {
  require_rank("transpose", x, 2);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  Tensor out({c, r});
  as_mat(out, c, r) = as_mat(x.value(), r, c).transpose();
  return x.graph().make(std::move(out), {x}, [r, c](const Tensor&, const Tensor& g, InputGrads& in) {
    as_mat(in.grad(0), r, c) += as_mat(g, c, r).transpose();
  });
}

Var slice_cols(const Var& x, std::size_t start, std::size_t count) {
  require_rank("slice_cols", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (count == 0 || start + count > cols) {
    shape_error("slice_cols", "columns [" + std::to_string(start) + ", " +
                                  std::to_string(start + count) + ") of " + shape_str(x.shape()));
  }
  Tensor out({rows, count});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.value().data() + r * cols + start, count, out.data() + r * count);
  }
  return x.graph().make(std::move(out), {x},
                        [rows, cols, start, count](const Tensor&, const Tensor& g, InputGrads& in) {
                          Tensor& dst = in.grad(0);
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t c = 0; c < count; ++c) {
                              dst[r * cols + start + c] += g[r * count + c];
                            }
                          }
                        });
}

Var slice_rows(const Var& x, std::size_t start, std::size_t count) {
  require_rank("slice_rows", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (count == 0 || start + count > rows) {
    shape_error("slice_rows", "rows [" + std::to_string(start) + ", " +
                                  std::to_string(start + count) + ") of " + shape_str(x.shape()));
  }
  Tensor out({count, cols});
  std::copy_n(x.value().data() + start * cols, count * cols, out.data());
  return x.graph().make(std::move(out), {x},
                        [cols, start](const Tensor&, const Tensor& g, InputGrads& in) {
                          Tensor& dst = in.grad(0);
                          for (std::size_t i = 0; i < g.size(); ++i) dst[start * cols + i] += g[i];
                        });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) shape_error("concat_cols", "no inputs");
  const std::size_t rows = parts[0].shape().size() == 2 ? parts[0].shape()[0] : 0;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank("concat_cols", p, 2);
    if (p.shape()[0] != rows) shape_error("concat_cols", "row counts differ");
    offsets.push_back(total);
    total += p.shape()[1];
  }
  Tensor out({rows, total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = parts[k].shape()[1];
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(parts[k].value().data() + r * w, w, out.data() + r * total + offsets[k]);
    }
  }
  return parts[0].graph().make(
      std::move(out), std::vector<Var>(parts.begin(), parts.end()),
      [rows, total, offsets](const Tensor&, const Tensor& g, InputGrads& in) {
        for (std::size_t k = 0; k < in.size(); ++k) {
          if (!in.wants(k)) continue;
          Tensor& dst = in.grad(k);
          const std::size_t w = dst.cols();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) dst[r * w + c] += g[r * total + offsets[k] + c];
          }
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) shape_error("concat_rows", "no inputs");
  const std::size_t cols = parts[0].shape().size() == 2 ? parts[0].shape()[1] : 0;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank("concat_rows", p, 2);
    if (p.shape()[1] != cols) shape_error("concat_rows", "column counts differ");
    offsets.push_back(total * cols);
    total += p.shape()[0];
  }
  Tensor out({total, cols});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::copy_n(parts[k].value().data(), parts[k].size(), out.data() + offsets[k]);
  }
  return parts[0].graph().make(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                               [offsets](const Tensor&, const Tensor& g, InputGrads& in) {
                                 for (std::size_t k = 0; k < in.size(); ++k) {
                                   if (!in.wants(k)) continue;
                                   Tensor& dst = in.grad(k);
                                   for (std::size_t i = 0; i < dst.size(); ++i) {
                                     dst[i] += g[offsets[k] + i];
                                   }
                                 }
                               });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require_rank("linear", w, 2);
  if (x.value().rank() == 0) shape_error("linear", "scalar input");
  const std::size_t d_in = w.shape()[0], d_out = w.shape()[1];
  if (x.value().cols() != d_in) {
    shape_error("linear", "input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  }
  require_size("linear", b, d_out, "bias");
  const std::size_t rows = x.value().rows();
  Shape out_shape = x.shape();
  out_shape.back() = d_out;
  Tensor out(out_shape);
  auto om = as_mat(out, rows, d_out);
  om.noalias() = as_mat(x.value(), rows, d_in) * as_mat(w.value(), d_in, d_out);
  om.rowwise() += as_mat(b.value(), 1, d_out).row(0);
  return x.graph().make(
      std::move(out), {x, w, b}, [rows, d_in, d_out](const Tensor&, const Tensor& g, InputGrads& in) {
        const auto gm = as_mat(g, rows, d_out);
        if (in.wants(0)) {
          as_mat(in.grad(0), rows, d_in).noalias() +=
              gm * as_mat(in.value(1), d_in, d_out).transpose();
        }
        if (in.wants(1)) {
          as_mat(in.grad(1), d_in, d_out).noalias() +=
              as_mat(in.value(0), rows, d_in).transpose() * gm;
        }
        if (in.wants(2)) as_mat(in.grad(2), 1, d_out) += gm.colwise().sum();
      });
}

// ---- convolution -------------------------------------------------------------

Var conv1d(const Var& x, const Var& w, const Var& bias, std::size_t stride) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", w, 3);
  const std::size_t c_in = x.shape()[0], len = x.shape()[1];
  const std::size_t c_out = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != c_in) {
    shape_error("conv1d", "input " + shape_str(x.shape()) + " vs kernel " + shape_str(w.shape()));
  }
  if (stride == 0) shape_error("conv1d", "stride must be >= 1");
  if (k == 0 || k > len) {
    shape_error("conv1d", "kernel " + std::to_string(k) + " longer than input " + std::to_string(len));
  }
  require_size("conv1d", bias, c_out, "bias");
  const std::size_t out_len = (len - k) / stride + 1;
  const std::size_t patch = c_in * k;

  // im2col: column t holds x[i, t*stride + j] at row i*k + j.
  auto im2col = [=](const Tensor& xv) {
    Tensor cols({patch, out_len});
    for (std::size_t i = 0; i < c_in; ++i) {
      const double* src = xv.data() + i * len;
      for (std::size_t j = 0; j < k; ++j) {
        double* dst = cols.data() + (i * k + j) * out_len;
        for (std::size_t t = 0; t < out_len; ++t) dst[t] = src[t * stride + j];
      }
    }
    return cols;
  };

  const Tensor cols = im2col(x.value());
  Tensor out({c_out, out_len});
  auto om = as_mat(out, c_out, out_len);
  om.noalias() = as_mat(w.value(), c_out, patch) * as_mat(cols, patch, out_len);
  om.colwise() += as_mat(bias.value(), c_out, 1).col(0);

  return x.graph().make(
      std::move(out), {x, w, bias},
      [=](const Tensor&, const Tensor& g, InputGrads& in) {
        const auto gm = as_mat(g, c_out, out_len);
        if (in.wants(1)) {
          const Tensor cols = im2col(in.value(0));
          as_mat(in.grad(1), c_out, patch).noalias() +=
              gm * as_mat(cols, patch, out_len).transpose();
        }
        if (in.wants(2)) as_mat(in.grad(2), c_out, 1) += gm.rowwise().sum();
        if (in.wants(0)) {
          Tensor dcols({patch, out_len});
          as_mat(dcols, patch, out_len).noalias() =
              as_mat(in.value(1), c_out, patch).transpose() * gm;
          Tensor& dx = in.grad(0);
          for (std::size_t i = 0; i < c_in; ++i) {
            double* dst = dx.data() + i * len;
            for (std::size_t j = 0; j < k; ++j) {
              const double* src = dcols.data() + (i * k + j) * out_len;
              for (std::size_t t = 0; t < out_len; ++t) dst[t * stride + j] += src[t];
            }
          }
        }
      });
}

// ---- normalization -----------------------------------------------------------

namespace {

enum class AffineAxis { PerRow, PerColumn };

// Standardizes each row of an [rows x cols] view, then applies gain/shift
// indexed by row (instance norm) or by column (layer norm).
Var normalize_rows(const std::string& op, const Var& x, const Var& gain, const Var& shift,
                   double eps, AffineAxis axis) {
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  const std::size_t affine = axis == AffineAxis::PerRow ? rows : cols;
  require_size(op, gain, affine, "gain");
  require_size(op, shift, affine, "shift");

  Tensor normalized(x.shape());
  std::vector<double> inv_std(rows);
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.value().data() + r * cols;
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += src[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (src[c] - mean) * (src[c] - mean);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const double xhat = (src[c] - mean) * inv_std[r];
      const std::size_t a = axis == AffineAxis::PerRow ? r : c;
      normalized[r * cols + c] = xhat;
      out[r * cols + c] = gain.value()[a] * xhat + shift.value()[a];
    }
  }

  return x.graph().make(
      std::move(out), {x, gain, shift},
      [rows, cols, axis, normalized = std::move(normalized), inv_std = std::move(inv_std)](
          const Tensor&, const Tensor& g, InputGrads& in) {
        const Tensor& gain = in.value(1);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t base = r * cols;
          if (in.wants(1) || in.wants(2)) {
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t a = axis == AffineAxis::PerRow ? r : c;
              if (in.wants(1)) in.grad(1)[a] += g[base + c] * normalized[base + c];
              if (in.wants(2)) in.grad(2)[a] += g[base + c];
            }
          }
          if (!in.wants(0)) continue;
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t a = axis == AffineAxis::PerRow ? r : c;
            const double d = g[base + c] * gain[a];
            mean_d += d;
            mean_dx += d * normalized[base + c];
          }
          mean_d /= static_cast<double>(cols);
          mean_dx /= static_cast<double>(cols);
          Tensor& dx = in.grad(0);
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t a = axis == AffineAxis::PerRow ? r : c;
            const double d = g[base + c] * gain[a];
            dx[base + c] += inv_std[r] * (d - mean_d - normalized[base + c] * mean_dx);
          }
        }
      });
}

}  // namespace

Var instance_norm(const Var& x, const Var& gain, const Var& shift, double eps) {
  require_rank("instance_norm", x, 2);
  if (x.shape()[1] < 2) shape_error("instance_norm", "need at least 2 samples per channel");
  return normalize_rows("instance_norm", x, gain, shift, eps, AffineAxis::PerRow);
}

Var layer_norm(const Var& x, const Var& gain, const Var& shift, double eps) {
  if (x.value().rank() == 0 || x.value().cols() < 2) {
    shape_error("layer_norm", "last axis must have at least 2 entries, got " + shape_str(x.shape()));
  }
  return normalize_rows("layer_norm", x, gain, shift, eps, AffineAxis::PerColumn);
}

// ---- losses --------------------------------------------------------------------

Var binary_cross_entropy(const Var& probs, std::span<const double> labels) {
  if (probs.size() == 0 || labels.empty()) throw Error(ErrorCode::EmptyBatch, "cross-entropy on empty batch");
  if (probs.size() != labels.size()) {
    shape_error("binary_cross_entropy", std::to_string(probs.size()) + " predictions vs " +
                                            std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = labels.size();
  std::vector<double> y(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(probs.value()[i], kProbClamp, 1.0 - kProbClamp);
    total += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return probs.graph().make(
      Tensor::scalar(-total / static_cast<double>(n)), {probs},
      [y = std::move(y)](const Tensor&, const Tensor& g, InputGrads& in) {
        const Tensor& p = in.value(0);
        Tensor& dst = in.grad(0);
        const double inv_n = 1.0 / static_cast<double>(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (p[i] < kProbClamp || p[i] > 1.0 - kProbClamp) continue;
          dst[i] += -g[0] * inv_n * (y[i] / p[i] - (1.0 - y[i]) / (1.0 - p[i]));
        }
      });
}

Var mean_squared_error(const Var& preds, std::span<const double> targets) {
  if (preds.size() == 0 || targets.empty()) throw Error(ErrorCode::EmptyBatch, "MSE on empty batch");
  if (preds.size() != targets.size()) {
    shape_error("mean_squared_error", std::to_string(preds.size()) + " predictions vs " +
                                          std::to_string(targets.size()) + " targets");
  }
  std::vector<double> t(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double diff = t[i] - preds.value()[i];
    total += diff * diff;
  }
  Tensor value = Tensor::scalar(total / static_cast<double>(t.size()));
  return preds.graph().make(
      std::move(value), {preds},
      [t = std::move(t)](const Tensor&, const Tensor& g, InputGrads& in) {
        const Tensor& x = in.value(0);
        Tensor& dst = in.grad(0);
        const double scale = 2.0 / static_cast<double>(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) dst[i] += g[0] * scale * (x[i] - t[i]);
      });
}

}  // namespace prognosis::ad
