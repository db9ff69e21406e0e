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

#include "eminv/estimator.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <string>

#include "eminv/errors.hpp"
#include "eminv/parallel.hpp"

namespace eminv {

namespace {

/// Exact byte image of a ρ vector; two particles share a conditional run iff
/// their coordinates are bit-identical.
std::string rho_key(const Eigen::VectorXd& rho) {
  return {reinterpret_cast<const char*>(rho.data()),
          static_cast<std::size_t>(rho.size()) * sizeof(double)};
}

struct DistinctRhos {
  std::vector<Eigen::VectorXd> values;      // first-seen order
  std::vector<double> weight;               // aggregated cloud weight
  std::vector<int> particle_to_distinct;    // index per particle
};

DistinctRhos collect_distinct(const ParticleCloud& cloud) {
  DistinctRhos out;
  std::map<std::string, int> seen;
  out.particle_to_distinct.reserve(cloud.particles.size());
  for (std::size_t i = 0; i < cloud.particles.size(); ++i) {
    const auto& p = cloud.particles[i];
    auto [it, inserted] = seen.try_emplace(rho_key(p.rho), static_cast<int>(out.values.size()));
    if (inserted) {
      out.values.push_back(p.rho);
      out.weight.push_back(0.0);
    }
    out.weight[static_cast<std::size_t>(it->second)] += cloud.weights[static_cast<Eigen::Index>(i)];
    out.particle_to_distinct.push_back(it->second);
  }
  return out;
}

void require_final_cloud(const ParticleCloud& cloud) {
  if (cloud.particles.empty()) throw ValidationError("estimator: empty particle cloud");
  if (cloud.alpha != 1.0) {
    throw ValidationError("estimator: cloud must be at temperature one");
  }
  if (cloud.weights.size() != static_cast<Eigen::Index>(cloud.particles.size())) {
    throw ValidationError("estimator: weights and particles are inconsistent");
  }
}

}  // namespace

PosteriorSummary rb_moments(const InverseProblem& problem, const ParticleCloud& cloud,
                            int threads) {
  require_final_cloud(cloud);
  const DistinctRhos distinct = collect_distinct(cloud);
  const int num_distinct = static_cast<int>(distinct.values.size());
  const int num_freq = problem.num_frequencies();
  const int dim = problem.state_dim();

  std::vector<std::vector<GaussianBelief>> smoothed(static_cast<std::size_t>(num_distinct));
  std::vector<std::string> errors(static_cast<std::size_t>(num_distinct));
  parallel_for(num_distinct, threads, [&](int v) {
    try {
      const CorrelationParam rho = problem.make_rho(distinct.values[static_cast<std::size_t>(v)]);
      const auto transitions = problem.transitions(rho);
      const FilterOutput filter = kalman_filter(problem.priors(), transitions,
                                                problem.observation_models(),
                                                problem.measurements());
      smoothed[static_cast<std::size_t>(v)] = rts_smoother(filter, transitions);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(v)] = e.what();
    }
  });
  for (int v = 0; v < num_distinct; ++v) {
    if (!errors[static_cast<std::size_t>(v)].empty()) {
      std::string rho_text;
      const auto& val = distinct.values[static_cast<std::size_t>(v)];
      for (Eigen::Index i = 0; i < val.size(); ++i) {
        rho_text += (i ? ", " : "") + std::to_string(val[i]);
      }
      throw NumericError("smoothing failed at rho = [" + rho_text +
                         "]: " + errors[static_cast<std::size_t>(v)]);
    }
  }

  PosteriorSummary out;
  out.mean.assign(static_cast<std::size_t>(num_freq), Eigen::VectorXd::Zero(dim));
  out.cov.assign(static_cast<std::size_t>(num_freq), Eigen::MatrixXd::Zero(dim, dim));
  for (int k = 0; k < num_freq; ++k) {
    for (int v = 0; v < num_distinct; ++v) {
      out.mean[static_cast<std::size_t>(k)] +=
          distinct.weight[static_cast<std::size_t>(v)] *
          smoothed[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)].mean;
    }
    // Law of total variance: mixture covariance = mean of conditional
    // covariances + covariance of conditional means.
    for (int v = 0; v < num_distinct; ++v) {
      const auto& belief = smoothed[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
      const Eigen::VectorXd centered = belief.mean - out.mean[static_cast<std::size_t>(k)];
      out.cov[static_cast<std::size_t>(k)] +=
          distinct.weight[static_cast<std::size_t>(v)] *
          (belief.cov + centered * centered.transpose());
    }
    out.cov[static_cast<std::size_t>(k)] = symmetrize(out.cov[static_cast<std::size_t>(k)]);
  }
  return out;
}

std::vector<std::vector<Eigen::VectorXd>> posterior_samples(const InverseProblem& problem,
                                                            const ParticleCloud& cloud, int n,
                                                            std::uint64_t seed, int threads) {
  require_final_cloud(cloud);
  if (n < 1) throw ValidationError("posterior_samples: need at least one draw");
  const DistinctRhos distinct = collect_distinct(cloud);
  const int num_distinct = static_cast<int>(distinct.values.size());

  struct ConditionalRun {
    FilterOutput filter;
    std::vector<TransitionModel> transitions;
  };
  std::vector<ConditionalRun> runs(static_cast<std::size_t>(num_distinct));
  for (int v = 0; v < num_distinct; ++v) {
    auto& run = runs[static_cast<std::size_t>(v)];
    const CorrelationParam rho = problem.make_rho(distinct.values[static_cast<std::size_t>(v)]);
    run.transitions = problem.transitions(rho);
    run.filter = kalman_filter(problem.priors(), run.transitions,
                               problem.observation_models(), problem.measurements());
  }

  std::vector<std::vector<Eigen::VectorXd>> draws(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int j) {
    RandomStream rng(derive_seed(seed, "draw", static_cast<std::uint64_t>(j)));
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = cloud.particles.size() - 1;
    for (std::size_t i = 0; i < cloud.particles.size(); ++i) {
      cum += cloud.weights[static_cast<Eigen::Index>(i)];
      if (u <= cum) {
        pick = i;
        break;
      }
    }
    const auto& run =
        runs[static_cast<std::size_t>(distinct.particle_to_distinct[pick])];
    draws[static_cast<std::size_t>(j)] = backward_sample(run.filter, run.transitions, rng);
  });
  return draws;
}

std::vector<ProfileRow> frequency_profiles(const PosteriorSummary& summary,
                                           const BlockLayout& layout, Property property,
                                           int area) {
  if (summary.mean.empty() || summary.mean.size() != summary.cov.size()) {
    throw ValidationError("frequency_profiles: malformed summary");
  }
  const int idx = layout.state_index(property, area);
  std::vector<ProfileRow> rows;
  rows.reserve(summary.mean.size());
  for (std::size_t k = 0; k < summary.mean.size(); ++k) {
    if (summary.mean[k].size() != layout.state_dim()) {
      throw ValidationError("frequency_profiles: summary does not match the layout");
    }
    const double var = summary.cov[k](idx, idx);
    rows.push_back(ProfileRow{static_cast<int>(k), summary.mean[k][idx],
                              std::sqrt(std::max(var, 0.0))});
  }
  return rows;
}

std::vector<RhoHistogram> rho_histograms(const ParticleCloud& cloud, int bins) {
  if (cloud.particles.empty()) throw ValidationError("rho_histograms: empty cloud");
  if (bins < 2) throw ValidationError("rho_histograms: need at least two bins");
  const Eigen::Index dim = cloud.particles.front().rho.size();

  std::vector<RhoHistogram> out(static_cast<std::size_t>(dim));
  for (auto& h : out) {
    h.edges = Eigen::VectorXd::LinSpaced(bins + 1, 0.0, 1.0);
    h.counts = Eigen::VectorXi::Zero(bins);
    h.mass = Eigen::VectorXd::Zero(bins);
  }
  for (std::size_t i = 0; i < cloud.particles.size(); ++i) {
    const auto& rho = cloud.particles[i].rho;
    if (rho.size() != dim) throw ValidationError("rho_histograms: ragged cloud");
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double x = rho[c];
      if (!(x >= 0.0) || !(x <= 1.0)) {
        throw ValidationError("rho_histograms: component outside [0, 1]");
      }
      const int bin = std::min(static_cast<int>(x * bins), bins - 1);
      out[static_cast<std::size_t>(c)].counts[bin] += 1;
      out[static_cast<std::size_t>(c)].mass[bin] += cloud.weights[static_cast<Eigen::Index>(i)];
    }
  }
  return out;
}

PosteriorSummary prior_summary(const std::vector<MarginalPrior>& priors) {
  if (priors.empty()) throw ValidationError("prior_summary: no marginals");
  PosteriorSummary out;
  out.mean.reserve(priors.size());
  out.cov.reserve(priors.size());
  for (const auto& p : priors) {
    out.mean.push_back(p.mean);
    out.cov.push_back(p.cov.matrix());
  }
  return out;
}

}  // namespace eminv
