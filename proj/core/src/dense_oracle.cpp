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

#include "eminv/dense_oracle.hpp"

#include <string>

#include "eminv/errors.hpp"

namespace eminv {

GaussianDist dense_joint_y_distribution(const InverseProblem& problem,
                                        const CorrelationParam& rho, int dimension_cap) {
  const int k = problem.num_frequencies();
  const int state_dim = problem.state_dim();
  const int obs_dim = problem.obs_dim();
  const int total = k * (state_dim + obs_dim);
  if (total > dimension_cap) {
    throw ValidationError("dense joint dimension " + std::to_string(total) +
                          " exceeds the cap of " + std::to_string(dimension_cap));
  }

  const Eigen::VectorXd d = expand_rho(rho, problem.layout());
  const auto& priors = problem.priors();
  const auto& obs = problem.observation_models();

  Eigen::VectorXd mean(k * obs_dim);
  for (int i = 0; i < k; ++i) {
    mean.segment(i * obs_dim, obs_dim) =
        obs[static_cast<std::size_t>(i)].a * priors[static_cast<std::size_t>(i)].mean +
        obs[static_cast<std::size_t>(i)].y0;
  }

  Eigen::MatrixXd cov(k * obs_dim, k * obs_dim);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      // Cov(X_i, X_j) = H_i · D^{j−i} · H_j; the damping acts once per step.
      const Eigen::VectorXd dpow = d.array().pow(j - i);
      const Eigen::MatrixXd cross = priors[static_cast<std::size_t>(i)].sqrt.matrix() *
                                    dpow.asDiagonal() *
                                    priors[static_cast<std::size_t>(j)].sqrt.matrix();
      Eigen::MatrixXd block = obs[static_cast<std::size_t>(i)].a * cross *
                              obs[static_cast<std::size_t>(j)].a.transpose();
      if (i == j) {
        block += obs[static_cast<std::size_t>(i)].r.matrix();
        block = symmetrize(block);
      }
      cov.block(i * obs_dim, j * obs_dim, obs_dim, obs_dim) = block;
      if (i != j) {
        cov.block(j * obs_dim, i * obs_dim, obs_dim, obs_dim) = block.transpose();
      }
    }
  }
  return GaussianDist(std::move(mean), SpdMatrix(symmetrize(cov)));
}

}  // namespace eminv
