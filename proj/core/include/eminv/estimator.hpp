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
#include <cstdint>
#include <vector>

#include "eminv/kalman.hpp"
#include "eminv/problem.hpp"
#include "eminv/smc.hpp"

namespace eminv {

/// Posterior mean and covariance of the state at every frequency.
struct PosteriorSummary {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
};

struct ProfileRow {
  int frequency = 0;
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Weighted histogram of one component of ρ on [0, 1]. `counts` are raw
/// particle counts; `mass` is the weight in each bin (sums to one). The value
/// 1.0 falls in the last bin.
struct RhoHistogram {
  Eigen::VectorXd edges;  // bins + 1 equally spaced edges
  Eigen::VectorXi counts;
  Eigen::VectorXd mass;
};

/// Moments of p(X | Y) by mixing the exact conditional smoother moments over
/// the final cloud (law of total variance): the state is never sampled.
/// The smoother runs once per *distinct* ρ in the cloud; accumulation order
/// is fixed, so results are identical for any thread count. Requires a cloud
/// at temperature one.
PosteriorSummary rb_moments(const InverseProblem& problem, const ParticleCloud& cloud,
                            int threads = 1);

/// n joint posterior draws of (X_1, ..., X_K): pick a particle by weight,
/// then sample the state trajectory conditionally on its ρ by backward
/// sampling. Filter passes are cached per distinct ρ; each draw runs on its
/// own substream of `seed`.
std::vector<std::vector<Eigen::VectorXd>> posterior_samples(const InverseProblem& problem,
                                                            const ParticleCloud& cloud, int n,
                                                            std::uint64_t seed,
                                                            int threads = 1);

/// Mean ± standard deviation of one (property, area) component across the
/// frequency axis.
std::vector<ProfileRow> frequency_profiles(const PosteriorSummary& summary,
                                           const BlockLayout& layout, Property property,
                                           int area);

/// One weighted histogram per component of ρ.
std::vector<RhoHistogram> rho_histograms(const ParticleCloud& cloud, int bins);

/// The no-data analogue of rb_moments: the marginal priors themselves.
PosteriorSummary prior_summary(const std::vector<MarginalPrior>& priors);

}  // namespace eminv
