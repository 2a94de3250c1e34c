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

// Central-difference gradient oracle and the suite that compares it with
// reverse-mode gradients for every op and for the full model loss.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prognosis/tensor.hpp"

namespace prognosis::ad {

/// (f(x + h e_i) - f(x - h e_i)) / (2h) for every coordinate i.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

/// Central difference of f with respect to one coordinate that f reads by
/// reference. The coordinate is restored before returning.
double central_difference(const std::function<double()>& f, double& coordinate, double h);

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is ~0 from dividing rounding noise by rounding noise. With h = 1e-3
/// a loss near 10 carries roughly 1e-12 of rounding noise in the difference.
double relative_error(double analytic, double numeric, double floor = 1e-6);

}  // namespace prognosis::ad

namespace prognosis {

struct GradcheckOptions {
  std::uint64_t seed = 1;
  double step = 1e-3;
  double tolerance = 1e-4;
  /// Coordinates sampled per op.
  std::size_t coords_per_op = 20;
  /// Coordinates sampled across all parameters of the desk model.
  std::size_t model_coords = 200;
  bool include_model = true;
};

struct GradcheckCase {
  std::string name;
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  bool passed() const;
};

GradcheckReport run_gradcheck_suite(const GradcheckOptions& options);

}  // namespace prognosis
