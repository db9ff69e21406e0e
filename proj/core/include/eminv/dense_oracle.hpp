// Copyright 2026 The eminv Authors
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

#include "eminv/gaussian.hpp"
#include "eminv/problem.hpp"

namespace eminv {

/// The exact joint Gaussian of all stacked observations (Y_1, ..., Y_K) given
/// ρ, built densely from the closed-form state cross-covariances
///   Cov(X_i, X_j) = H_i · D^{|i−j|} · H_j.
/// Quadratic memory and cubic cost in K·obs_dim: this is the reference
/// implementation the recursive filter is checked against, not a code path
/// for production sizes. Stacked dimensions beyond `dimension_cap` throw
/// ValidationError.
GaussianDist dense_joint_y_distribution(const InverseProblem& problem,
                                        const CorrelationParam& rho,
                                        int dimension_cap = 2000);

}  // namespace eminv
