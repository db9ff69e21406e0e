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

#include "eminv/problem.hpp"

#include <string>

#include "eminv/errors.hpp"

namespace eminv {

InverseProblem::InverseProblem(BlockLayout layout, std::vector<MarginalPrior> priors,
                               std::vector<LinearObservationModel> observation_models,
                               std::vector<Eigen::VectorXd> measurements, RhoCase rho_case)
    : layout_(std::move(layout)),
      priors_(std::move(priors)),
      obs_(std::move(observation_models)),
      measurements_(std::move(measurements)),
      rho_case_(rho_case) {
  const std::size_t k = priors_.size();
  if (k == 0) throw ValidationError("problem needs at least one frequency");
  if (obs_.size() != k || measurements_.size() != k) {
    throw ValidationError("problem needs one observation model and one measurement per frequency");
  }
  const int dim = layout_.state_dim();
  const Eigen::Index obs_dim = obs_.front().a.rows();
  for (std::size_t i = 0; i < k; ++i) {
    if (priors_[i].mean.size() != dim) {
      throw ValidationError("prior dimension does not match the layout at frequency " +
                            std::to_string(i));
    }
    obs_[i].validate();
    if (obs_[i].a.cols() != dim || obs_[i].a.rows() != obs_dim) {
      throw ValidationError("observation model dimensions are inconsistent at frequency " +
                            std::to_string(i));
    }
    if (measurements_[i].size() != obs_dim) {
      throw ValidationError("measurement dimension does not match the model at frequency " +
                            std::to_string(i));
    }
  }
  sqrt_ratio_.reserve(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    sqrt_ratio_.push_back(priors_[i + 1].sqrt.matrix() * priors_[i].sqrt_inv);
  }
}

CorrelationParam InverseProblem::make_rho(const Eigen::VectorXd& values) const {
  CorrelationParam rho{rho_case_, values};
  expand_rho(rho, layout_);  // validates length and range
  return rho;
}

std::vector<TransitionModel> InverseProblem::transitions(const CorrelationParam& rho) const {
  const Eigen::VectorXd d = expand_rho(rho, layout_);
  const Eigen::VectorXd s = (1.0 - d.array().square()).max(0.0).sqrt();
  std::vector<TransitionModel> out;
  out.reserve(sqrt_ratio_.size());
  for (std::size_t k = 0; k < sqrt_ratio_.size(); ++k) {
    Eigen::MatrixXd m = d.asDiagonal() * sqrt_ratio_[k];
    Eigen::VectorXd b = priors_[k + 1].mean - m * priors_[k].mean;
    Eigen::MatrixXd q =
        symmetrize(s.asDiagonal() * priors_[k + 1].cov.matrix() * s.asDiagonal());
    out.push_back(TransitionModel{std::move(m), std::move(b), std::move(q)});
  }
  return out;
}

}  // namespace eminv
