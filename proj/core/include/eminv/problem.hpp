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

#include "eminv/layout.hpp"
#include "eminv/metamodel.hpp"
#include "eminv/prior.hpp"

namespace eminv {

/// Everything the conditional (given ρ) inference needs for one scenario:
/// the per-frequency marginal priors, surrogate observation models and the
/// measured responses. The products H_{k+1}·H_k⁻¹ are cached at assembly so
/// building the transitions for one value of ρ costs only a diagonal scaling
/// per step.
class InverseProblem {
 public:
  InverseProblem(BlockLayout layout, std::vector<MarginalPrior> priors,
                 std::vector<LinearObservationModel> observation_models,
                 std::vector<Eigen::VectorXd> measurements, RhoCase rho_case);

  const BlockLayout& layout() const { return layout_; }
  const std::vector<MarginalPrior>& priors() const { return priors_; }
  const std::vector<LinearObservationModel>& observation_models() const { return obs_; }
  const std::vector<Eigen::VectorXd>& measurements() const { return measurements_; }
  RhoCase rho_case() const { return rho_case_; }

  int num_frequencies() const { return static_cast<int>(priors_.size()); }
  int state_dim() const { return layout_.state_dim(); }
  int obs_dim() const { return static_cast<int>(obs_.front().a.rows()); }
  int rho_dimension() const { return rho_dim(rho_case_, layout_); }

  /// Wraps raw sampler coordinates as a validated correlation parameter.
  CorrelationParam make_rho(const Eigen::VectorXd& values) const;

  /// The K−1 transition models for one value of ρ, from the cached ratios.
  std::vector<TransitionModel> transitions(const CorrelationParam& rho) const;

 private:
  BlockLayout layout_;
  std::vector<MarginalPrior> priors_;
  std::vector<LinearObservationModel> obs_;
  std::vector<Eigen::VectorXd> measurements_;
  RhoCase rho_case_;
  std::vector<Eigen::MatrixXd> sqrt_ratio_;  // H_{k+1}·H_k⁻¹, k = 0..K−2
};

}  // namespace eminv
