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

#include "eminv/gaussian.hpp"
#include "eminv/layout.hpp"
#include "eminv/random.hpp"

namespace eminv {

/// Parameters of the per-frequency marginal prior. The per-component standard
/// deviation is σ_i = sigma_abs + sigma_rel·|m_i| around the block reference
/// value m_i; components of the same property within a block correlate as
/// spatial_correlation^|i−j| along the area index, and components of
/// different properties or blocks are independent.
struct PriorSpec {
  /// One row per block, columns ordered (eps_re, eps_im, mu_re, mu_im).
  Eigen::MatrixXd reference;
  double sigma_abs = 0.0;
  double sigma_rel = 0.0;
  double spatial_correlation = 0.0;

  void validate(const BlockLayout& layout) const;
};

/// Marginal prior at one frequency: mean, covariance, its symmetric PD square
/// root and that root's inverse (both block-diagonal like the covariance).
struct MarginalPrior {
  Eigen::VectorXd mean;
  SpdMatrix cov;
  SqrtMatrix sqrt;
  Eigen::MatrixXd sqrt_inv;
};

/// Granularity of the across-frequency correlation parameter ρ ∈ [0,1]:
/// one scalar, one value per block, or one value per (property, block).
enum class RhoCase : int { kScalar = 1, kPerBlock = 2, kPerBlockProperty = 3 };

int rho_dim(RhoCase c, const BlockLayout& layout);
RhoCase rho_case_from_int(int v);

/// Stable name for component `index` of ρ: "rho", "rho.b<block>" or
/// "rho.<property>.b<block>" depending on the case.
std::string rho_component_name(RhoCase c, const BlockLayout& layout, int index);

/// A concrete value of ρ for a given case and layout.
struct CorrelationParam {
  RhoCase rho_case = RhoCase::kScalar;
  Eigen::VectorXd values;  // length rho_dim(rho_case, layout)
};

/// One step of the conditionally linear-Gaussian frequency dynamics:
/// X_{k+1} = m·X_k + b + w,  w ~ N(0, q).
struct TransitionModel {
  Eigen::MatrixXd m;
  Eigen::VectorXd b;
  Eigen::MatrixXd q;
};

/// Assembles the block-diagonal spatial covariance (and its square roots)
/// around the reference means. All-zero standard deviation inside a block or
/// spatial_correlation = 1 make a block singular, which is rejected.
MarginalPrior build_spatial_prior(const BlockLayout& layout, const PriorSpec& spec);

/// Expands ρ to a per-state-component damping vector d ∈ [0,1]^{state_dim}.
/// Components of the same block (cases 1, 2) or the same (property, block)
/// pair (case 3) share a value.
Eigen::VectorXd expand_rho(const CorrelationParam& rho, const BlockLayout& layout);

/// The transition from frequency k to k+1 that preserves the marginals:
///   m = D·H_{k+1}·H_k⁻¹,   b = m_{k+1} − m·m_k,   q = S·P_{k+1}·S,
/// with D = diag(expand_rho(ρ)), S = sqrt(I − D²) and H_k the symmetric PD
/// square root of P_k. Because D is constant on the diagonal blocks of P_k,
/// it commutes with H_k and m·P_k·mᵀ + q = P_{k+1} holds exactly.
TransitionModel transition_model(const CorrelationParam& rho, const BlockLayout& layout,
                                 const MarginalPrior& from, const MarginalPrior& to);

/// Samples one trajectory (X_1, ..., X_K) of the dynamics. ρ = 1 reproduces a
/// frozen (deterministically shifted) trajectory, ρ = 0 independent draws.
std::vector<Eigen::VectorXd> sample_prior_trajectory(const CorrelationParam& rho,
                                                     const BlockLayout& layout,
                                                     const std::vector<MarginalPrior>& priors,
                                                     RandomStream& rng);

}  // namespace eminv
