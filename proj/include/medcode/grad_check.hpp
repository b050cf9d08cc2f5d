// Copyright 2026 The medcode Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "medcode/tensor.hpp"

namespace medcode {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Above this many coordinates a seeded random subset is checked.
  std::size_t max_coordinates = 10000;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::size_t coordinates_checked = 0;
  /// Parameter name and flat index of the worst coordinate.
  std::string worst;
  /// Set when the function produced NaN/Inf.
  std::string failure;
};

/// Scalar-valued function of the parameters; must build its graph on the
/// provided tape.
using LossFn = std::function<Var<double>(Tape<double>&)>;

/// Relative error used by grad_check: |a - n| / max(|a|, |n|, 1e-5).
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of f against central differences for
/// every non-frozen coordinate of params. Parameter gradients are zeroed
/// before and left holding the analytic gradient afterwards.
GradCheckReport grad_check(const LossFn& f,
                           const std::vector<Parameter<double>*>& params,
                           const GradCheckOptions& options = {});

}  // namespace medcode
