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

#include "eminv/prior.hpp"

#include <cmath>
#include <string>

#include "eminv/errors.hpp"

namespace eminv {

void PriorSpec::validate(const BlockLayout& layout) const {
  if (reference.rows() != layout.num_blocks() || reference.cols() != kNumProperties) {
    throw ValidationError("prior reference must have one row per block and " +
                          std::to_string(kNumProperties) + " columns");
  }
  if (!(sigma_abs >= 0.0) || !(sigma_rel >= 0.0)) {
    throw ValidationError("prior sigma_abs and sigma_rel must be non-negative");
  }
  if (sigma_abs + sigma_rel <= 0.0) {
    throw ValidationError("prior needs sigma_abs + sigma_rel > 0");
  }
  if (!(spatial_correlation >= 0.0) || !(spatial_correlation <= 1.0)) {
    throw ValidationError("prior spatial_correlation must lie in [0, 1]");
  }
}

MarginalPrior build_spatial_prior(const BlockLayout& layout, const PriorSpec& spec) {
  spec.validate(layout);
  const int dim = layout.state_dim();
  Eigen::VectorXd mean(dim);
  for (int p = 0; p < kNumProperties; ++p) {
    for (int b = 0; b < layout.num_blocks(); ++b) {
      const double ref = spec.reference(b, p);
      for (int a = 0; a < layout.areas_in_block(b); ++a) {
        mean[layout.state_index(static_cast<Property>(p), b, a)] = ref;
      }
    }
  }

  Eigen::VectorXd sigma = spec.sigma_abs + spec.sigma_rel * mean.cwiseAbs().array();

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd sqrt = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd sqrt_inv = Eigen::MatrixXd::Zero(dim, dim);
  for (int p = 0; p < kNumProperties; ++p) {
    for (int b = 0; b < layout.num_blocks(); ++b) {
      const int n = layout.areas_in_block(b);
      const int i0 = layout.state_index(static_cast<Property>(p), b, 0);
      Eigen::MatrixXd block(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          block(i, j) = sigma[i0 + i] * sigma[i0 + j] *
                        std::pow(spec.spatial_correlation, std::abs(i - j));
        }
      }
      SpdMatrix block_spd = [&] {
        try {
          return SpdMatrix(block);
        } catch (const NotPositiveDefiniteError&) {
          throw NotPositiveDefiniteError(
              "prior covariance block (" + std::string(property_name(static_cast<Property>(p))) +
              ", block " + std::to_string(b) + ") is not positive definite");
        }
      }();
      const Eigen::MatrixXd h = spd_sqrt(block_spd).matrix();
      cov.block(i0, i0, n, n) = block;
      sqrt.block(i0, i0, n, n) = h;
      sqrt_inv.block(i0, i0, n, n) =
          Eigen::LLT<Eigen::MatrixXd>(h).solve(Eigen::MatrixXd::Identity(n, n));
    }
  }
  return MarginalPrior{std::move(mean), SpdMatrix(std::move(cov)), SqrtMatrix(std::move(sqrt)),
                       std::move(sqrt_inv)};
}

int rho_dim(RhoCase c, const BlockLayout& layout) {
  switch (c) {
    case RhoCase::kScalar:
      return 1;
    case RhoCase::kPerBlock:
      return layout.num_blocks();
    case RhoCase::kPerBlockProperty:
      return kNumProperties * layout.num_blocks();
  }
  throw ValidationError("rho_dim: bad correlation case");
}

RhoCase rho_case_from_int(int v) {
  if (v < 1 || v > 3) {
    throw ValidationError("correlation case must be 1 (scalar), 2 (per block) or "
                          "3 (per block and property)");
  }
  return static_cast<RhoCase>(v);
}

std::string rho_component_name(RhoCase c, const BlockLayout& layout, int index) {
  if (index < 0 || index >= rho_dim(c, layout)) {
    throw ValidationError("rho component index out of range");
  }
  switch (c) {
    case RhoCase::kScalar:
      return "rho";
    case RhoCase::kPerBlock:
      return "rho.b" + std::to_string(index);
    case RhoCase::kPerBlockProperty: {
      const int nb = layout.num_blocks();
      return std::string("rho.") + property_name(static_cast<Property>(index / nb)) + ".b" +
             std::to_string(index % nb);
    }
  }
  throw ValidationError("rho_component_name: bad correlation case");
}

Eigen::VectorXd expand_rho(const CorrelationParam& rho, const BlockLayout& layout) {
  const int want = rho_dim(rho.rho_case, layout);
  if (rho.values.size() != want) {
    throw ValidationError("rho has " + std::to_string(rho.values.size()) + " components, layout needs " +
                          std::to_string(want));
  }
  if ((rho.values.array() < 0.0).any() || (rho.values.array() > 1.0).any()) {
    throw ValidationError("rho components must lie in [0, 1]");
  }
  Eigen::VectorXd d(layout.state_dim());
  for (int p = 0; p < kNumProperties; ++p) {
    for (int b = 0; b < layout.num_blocks(); ++b) {
      double v = 0.0;
      switch (rho.rho_case) {
        case RhoCase::kScalar:
          v = rho.values[0];
          break;
        case RhoCase::kPerBlock:
          v = rho.values[b];
          break;
        case RhoCase::kPerBlockProperty:
          v = rho.values[p * layout.num_blocks() + b];
          break;
      }
      for (int a = 0; a < layout.areas_in_block(b); ++a) {
        d[layout.state_index(static_cast<Property>(p), b, a)] = v;
      }
    }
  }
  return d;
}

TransitionModel transition_model(const CorrelationParam& rho, const BlockLayout& layout,
                                 const MarginalPrior& from, const MarginalPrior& to) {
  const Eigen::VectorXd d = expand_rho(rho, layout);
  Eigen::MatrixXd m = d.asDiagonal() * (to.sqrt.matrix() * from.sqrt_inv);
  Eigen::VectorXd b = to.mean - m * from.mean;
  const Eigen::VectorXd s = (1.0 - d.array().square()).max(0.0).sqrt();
  Eigen::MatrixXd q = symmetrize(s.asDiagonal() * to.cov.matrix() * s.asDiagonal());
  return TransitionModel{std::move(m), std::move(b), std::move(q)};
}

std::vector<Eigen::VectorXd> sample_prior_trajectory(const CorrelationParam& rho,
                                                     const BlockLayout& layout,
                                                     const std::vector<MarginalPrior>& priors,
                                                     RandomStream& rng) {
  if (priors.empty()) throw ValidationError("sample_prior_trajectory: no marginals given");
  const Eigen::VectorXd d = expand_rho(rho, layout);
  const Eigen::VectorXd s = (1.0 - d.array().square()).max(0.0).sqrt();
  const int dim = layout.state_dim();

  std::vector<Eigen::VectorXd> out;
  out.reserve(priors.size());
  Eigen::VectorXd x = priors[0].mean + priors[0].sqrt.matrix() * rng.normal_vector(dim);
  out.push_back(x);
  for (std::size_t k = 0; k + 1 < priors.size(); ++k) {
    const MarginalPrior& from = priors[k];
    const MarginalPrior& to = priors[k + 1];
    const Eigen::VectorXd carried =
        d.asDiagonal() * (to.sqrt.matrix() * (from.sqrt_inv * (x - from.mean)));
    const Eigen::VectorXd fresh =
        s.asDiagonal() * (to.sqrt.matrix() * rng.normal_vector(dim));
    x = to.mean + carried + fresh;
    out.push_back(x);
  }
  return out;
}

}  // namespace eminv
