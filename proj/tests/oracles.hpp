/*
 * Copyright 2026 The mumis authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Independent numerical oracles used by the tests. These stay deliberately
// dumb: central finite differences and brute-force loops, no shared code with
// the differentiation paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "mumis/tensor.hpp"

namespace mumis::test {

/// Central finite difference of f at x, one partial per element of x.
inline Tensor central_diff(const std::function<double(const Tensor&)>& f, const Tensor& x,
                           double eps = 1e-5) {
  Tensor grad(x.shape(), 0.0);
  Tensor probe = x.clone();
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double orig = probe.at(i);
    probe.at(i) = orig + eps;
    const double fp = f(probe);
    probe.at(i) = orig - eps;
    const double fm = f(probe);
    probe.at(i) = orig;
    grad.at(i) = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

/// Largest relative error between analytic and numeric gradients, with an
/// absolute floor so near-zero entries do not blow up the ratio.
inline double max_rel_err(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < analytic.numel(); ++i) {
    const double a = analytic.at(i), b = numeric.at(i);
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    worst = std::max(worst, std::abs(a - b) / denom);
  }
  return worst;
}

}  // namespace mumis::test
