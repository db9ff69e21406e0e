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

#include <Eigen/Core>
#include <vector>

#include "eminv/prior.hpp"
#include "eminv/problem.hpp"
#include "eminv/random.hpp"

namespace eminv {

/// A Gaussian state estimate at one frequency index. Covariances are kept
/// symmetric by construction; they may be singular (ρ = 1 gives zero
/// innovation noise) but never indefinite beyond roundoff.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int frequency = 0;
};

struct FilterOutput {
  std::vector<GaussianBelief> predicted;  // p(X_k | Y_{1:k−1})
  std::vector<GaussianBelief> filtered;   // p(X_k | Y_{1:k})
  double log_likelihood = 0.0;            // log p(Y_{1:K})
};

/// Forward Kalman recursion over the frequency axis. The measurement update
/// uses the Joseph form, which stays PSD for any gain; the log-likelihood
/// accumulates the innovation densities. Innovation covariances that fail
/// Cholesky raise NumericError naming the frequency.
FilterOutput kalman_filter(const std::vector<MarginalPrior>& priors,
                           const std::vector<TransitionModel>& transitions,
                           const std::vector<LinearObservationModel>& observation_models,
                           const std::vector<Eigen::VectorXd>& measurements);

/// Backward Rauch–Tung–Striebel pass: marginals p(X_k | Y_{1:K}). Singular
/// predicted covariances are handled by an eigendecomposition pseudo-solve,
/// which is exact for the degenerate-but-consistent case ρ = 1.
std::vector<GaussianBelief> rts_smoother(const FilterOutput& filter,
                                         const std::vector<TransitionModel>& transitions);

/// One joint draw (X_1, ..., X_K) ~ p(X | Y_{1:K}) by backward sampling from
/// the filtered quantities. Degenerate conditionals (zero innovation noise)
/// sample on their support.
std::vector<Eigen::VectorXd> backward_sample(const FilterOutput& filter,
                                             const std::vector<TransitionModel>& transitions,
                                             RandomStream& rng);

/// Filter bound to a problem and a value of ρ.
FilterOutput filter_for_rho(const InverseProblem& problem, const CorrelationParam& rho);

/// log p(Y_{1:K} | ρ) for the given problem.
double log_likelihood(const InverseProblem& problem, const CorrelationParam& rho);

}  // namespace eminv
