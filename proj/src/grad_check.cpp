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

#include "medcode/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "medcode/errors.hpp"

namespace medcode {
namespace {

struct Coordinate {
  Parameter<double>* param;
  Index flat;
};

// Evaluates f on a fresh evaluation-mode tape; NaN on numeric failure.
double evaluate(const LossFn& f) {
  try {
    Tape<double> tape(false, false);
    Var<double> out = f(tape);
    if (out.rows() != 1 || out.cols() != 1) {
      throw DimensionError("grad_check: function must return a scalar");
    }
    return out.item();
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const LossFn& f,
                           const std::vector<Parameter<double>*>& params,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  for (auto* p : params) p->zero_grad();

  try {
    Tape<double> tape(false, true);
    Var<double> loss = f(tape);
    if (!std::isfinite(loss.item())) {
      report.failure = "non-finite loss";
      return report;
    }
    tape.backward(loss);
  } catch (const NumericError& e) {
    report.failure = e.what();
    return report;
  }

  std::vector<Coordinate> coords;
  for (auto* p : params) {
    if (p->frozen) continue;
    for (Index i = 0; i < p->size(); ++i) coords.push_back({p, i});
  }
  if (coords.size() > options.max_coordinates) {
    Rng rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
  }

  for (const auto& c : coords) {
    double& x = c.param->value.data()[c.flat];
    const double saved = x;
    x = saved + options.step;
    const double up = evaluate(f);
    x = saved - options.step;
    const double down = evaluate(f);
    x = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      report.failure = "non-finite value while perturbing " + c.param->name;
      report.pass = false;
      return report;
    }
    const double numeric = (up - down) / (2.0 * options.step);
    const double analytic = c.param->grad.data()[c.flat];
    const double err = relative_error(analytic, numeric);
    if (err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst = c.param->name + "[" + std::to_string(c.flat) + "]";
    }
    ++report.coordinates_checked;
  }
  report.pass = report.max_rel_err < options.tolerance;
  return report;
}

}  // namespace medcode
