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

#include "prognosis/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "prognosis/autodiff.hpp"
#include "prognosis/model.hpp"
#include "prognosis/rng.hpp"
#include "prognosis/train.hpp"

namespace prognosis::ad {

double central_difference(const std::function<double()>& f, double& coordinate, double h) {
  const double saved = coordinate;
  coordinate = saved + h;
  const double up = f();
  coordinate = saved - h;
  const double down = f();
  coordinate = saved;
  return (up - down) / (2.0 * h);
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor probe = x;
  Tensor grad(x.shape(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] = central_difference([&] { return f(probe); }, probe[i], h);
  return grad;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace prognosis::ad

namespace prognosis {
namespace {

using ad::Graph;
using ad::Tensor;
using ad::Var;

using Builder = std::function<Var(std::vector<Var>&)>;

Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Reduces an op's output to a scalar by a fixed random weighting so every
// output element carries a distinct upstream gradient.
Var scalarize(const Var& out, const Tensor& weights) {
  if (out.size() == 1) return out;
  Graph& g = out.graph();
  return ad::sum(ad::mul(out, g.constant(weights)));
}

GradcheckCase check_op(const std::string& name, std::vector<Tensor> inputs, const Builder& build,
                       const GradcheckOptions& options, Rng& rng) {
  Tensor weights;
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.variable(t));
    Var out = build(vars);
    weights = random_tensor(rng, out.shape());
    g.backward(scalarize(out, weights));
    for (const auto& v : vars) analytic.push_back(g.grad(v));
  }
  auto loss = [&] {
    Graph g(Graph::Mode::Inference);
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.constant(t));
    return scalarize(build(vars), weights).value()[0];
  };

  std::size_t total = 0;
  for (const auto& t : inputs) total += t.size();
  GradcheckCase result{name, 0, 0.0, true};
  const std::size_t n = std::min(options.coords_per_op, total);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t flat = rng.index(total);
    std::size_t which = 0;
    while (flat >= inputs[which].size()) flat -= inputs[which++].size();
    const double numeric = ad::central_difference(loss, inputs[which][flat], options.step);
    const double err = ad::relative_error(analytic[which][flat], numeric);
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.coordinates;
  }
  result.passed = result.max_relative_error <= options.tolerance;
  return result;
}

GradcheckCase check_model(const GradcheckOptions& options, Rng& rng) {
  const model::ModelConfig config = model::ModelConfig::preset("desk");
  model::ModelParams params = model::init_params(config, options.seed);

  std::vector<train::TrainingExample> batch(2);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto& ex = batch[b];
    ex.segment.patient_id = "gradcheck";
    ex.segment.data.resize(dsp::BipolarSegment::kChannels * dsp::BipolarSegment::kSamples);
    for (auto& v : ex.segment.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    ex.y = b % 2 == 0 ? 1.0 : 0.0;
    ex.x = b % 2 == 0 ? 4.0 : 1.0;
    ex.patient_id = "gradcheck";
  }

  const train::BatchResult analytic = train::batch_gradients(params, config, batch);
  auto named = params.named();
  std::size_t total = 0;
  for (const auto& nt : named) total += nt.tensor->size();
  auto loss = [&] { return train::batch_loss(params, config, batch).total; };

  GradcheckCase result{"model L_total (desk)", 0, 0.0, true};
  for (std::size_t k = 0; k < options.model_coords; ++k) {
    std::size_t flat = rng.index(total);
    std::size_t which = 0;
    while (flat >= named[which].tensor->size()) flat -= named[which++].tensor->size();
    const double numeric = ad::central_difference(loss, (*named[which].tensor)[flat], options.step);
    const double err = ad::relative_error(analytic.grads[which][flat], numeric);
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.coordinates;
  }
  result.passed = result.max_relative_error <= options.tolerance;
  return result;
}

}  // namespace

bool GradcheckReport::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const GradcheckCase& c) { return c.passed; });
}

GradcheckReport run_gradcheck_suite(const GradcheckOptions& options) {
  Rng rng(options.seed);
  GradcheckReport report;
  auto run = [&](const std::string& name, std::vector<Tensor> inputs, const Builder& build) {
    report.cases.push_back(check_op(name, std::move(inputs), build, options, rng));
  };
  auto r = [&](ad::Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(rng, std::move(s), lo, hi); };

  run("add", {r({3, 4}), r({3, 4})}, [](auto& v) { return ad::add(v[0], v[1]); });
  run("mul", {r({3, 4}), r({3, 4})}, [](auto& v) { return ad::mul(v[0], v[1]); });
  run("scale", {r({5})}, [](auto& v) { return ad::scale(v[0], -1.7); });
  run("sum", {r({2, 3})}, [](auto& v) { return ad::sum(v[0]); });
  run("reshape", {r({2, 6})}, [](auto& v) { return ad::reshape(v[0], {3, 4}); });
  run("matmul", {r({3, 5}), r({5, 2})}, [](auto& v) { return ad::matmul(v[0], v[1]); });
  run("transpose", {r({3, 5})}, [](auto& v) { return ad::transpose(v[0]); });
  run("slice_cols", {r({3, 6})}, [](auto& v) { return ad::slice_cols(v[0], 2, 3); });
  run("slice_rows", {r({5, 2})}, [](auto& v) { return ad::slice_rows(v[0], 1, 3); });
  run("concat_cols", {r({3, 2}), r({3, 4})}, [](auto& v) { return ad::concat_cols(std::span<const Var>(v)); });
  run("concat_rows", {r({1, 3}), r({2, 3})}, [](auto& v) { return ad::concat_rows(std::span<const Var>(v)); });
  run("conv1d", {r({2, 23}), r({3, 2, 4}), r({3})}, [](auto& v) { return ad::conv1d(v[0], v[1], v[2], 3); });
  run("instance_norm", {r({3, 16}), r({3}, 0.5, 1.5), r({3})},
      [](auto& v) { return ad::instance_norm(v[0], v[1], v[2], 1e-5); });
  run("layer_norm", {r({4, 6}), r({6}, 0.5, 1.5), r({6})},
      [](auto& v) { return ad::layer_norm(v[0], v[1], v[2], 1e-5); });
  run("gelu", {r({4, 5}, -3.0, 3.0)}, [](auto& v) { return ad::gelu(v[0]); });
  run("sigmoid", {r({4, 5}, -4.0, 4.0)}, [](auto& v) { return ad::sigmoid(v[0]); });
  run("softmax", {r({3, 5}, -2.0, 2.0)}, [](auto& v) { return ad::softmax(v[0]); });
  run("linear", {r({4, 3}), r({3, 2}), r({2})}, [](auto& v) { return ad::linear(v[0], v[1], v[2]); });
  run("binary_cross_entropy", {r({4, 1}, 0.1, 0.9)},
      [](auto& v) { return ad::binary_cross_entropy(v[0], std::vector<double>{1, 0, 0, 1}); });
  run("mean_squared_error", {r({3, 1}, 1.0, 5.0)},
      [](auto& v) { return ad::mean_squared_error(v[0], std::vector<double>{1, 3, 5}); });

  if (options.include_model) report.cases.push_back(check_model(options, rng));
  return report;
}

}  // namespace prognosis
