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

#include "eminv/gaussian.hpp"
#include "eminv/layout.hpp"
#include "eminv/random.hpp"

namespace eminv {

/// Observation components per incidence angle: real and imaginary parts of
/// the two scattering channels measured in free space.
inline constexpr int kChannelsPerAngle = 4;

/// Affine surrogate of the electromagnetic solver at one frequency:
/// Y = a·X + y0 + noise, noise ~ N(0, r). Observation components stack the
/// reflection/transmission channels per incidence angle.
struct LinearObservationModel {
  Eigen::MatrixXd a;   // obs_dim × state_dim
  Eigen::VectorXd y0;  // obs_dim
  SpdMatrix r;         // obs_dim × obs_dim

  void validate() const;
};

/// Solver evaluations used to train the surrogate at one frequency.
struct TrainingSet {
  Eigen::MatrixXd states;        // num_pairs × state_dim
  Eigen::MatrixXd observations;  // num_pairs × obs_dim

  void validate() const;
};

/// Least-squares fit of (a, y0) with per-pair residuals Y − (a·X + y0).
struct MetamodelFit {
  Eigen::MatrixXd a;
  Eigen::VectorXd y0;
  Eigen::MatrixXd residuals;  // num_pairs × obs_dim
};

struct ResidualCovariance {
  Eigen::MatrixXd cov;          // obs_dim × obs_dim, symmetric PSD
  bool diagonal_only = false;   // too few pairs for a full matrix estimate
  bool positive_definite = false;
};

/// Entrywise spread of (a, y0) across bootstrap refits.
struct BootstrapSummary {
  Eigen::MatrixXd a_sd, a_lo, a_hi;
  Eigen::VectorXd y0_sd, y0_lo, y0_hi;
  int replicates = 0;
  int skipped = 0;  // resampled designs that lost full column rank
};

/// Ordinary least squares of each observation component on the state with an
/// intercept, all components sharing one QR of the design. Throws
/// ValidationError when the design is column-rank-deficient, naming the
/// offending columns.
MetamodelFit fit_linear_metamodel(const TrainingSet& data);

/// Covariance of the fit residuals with denominator num_pairs − num_regressors
/// (num_regressors = state_dim + 1). Falls back to the diagonal when the
/// degrees of freedom cannot support a full matrix.
ResidualCovariance residual_covariance(const Eigen::MatrixXd& residuals, int num_regressors);

/// Pair-resampling bootstrap of the fit. Refits run on independent substreams
/// of `seed`, so results do not depend on thread count. Rank-deficient
/// resamples are skipped and counted; more than 10% skipped is an error.
BootstrapSummary bootstrap_linearity_error(const TrainingSet& data, int replicates,
                                           std::uint64_t seed, int threads = 1);

/// One noisy observation Y = a·x + y0 + N(0, r).
Eigen::VectorXd observe(const LinearObservationModel& model, const Eigen::VectorXd& x,
                        RandomStream& rng);

/// A stand-in for the physical solver: an affine map per frequency, smooth in
/// both angle and frequency, plus an optional quadratic departure of relative
/// size gamma. gamma = 0 makes the solver exactly linear. The affine part is
/// independent of gamma for a fixed seed.
class SyntheticSolver {
 public:
  SyntheticSolver(const BlockLayout& layout, int num_frequencies, int num_angles,
                  double gamma, std::uint64_t seed);

  int num_frequencies() const { return static_cast<int>(a_.size()); }
  int obs_dim() const { return obs_dim_; }
  double gamma() const { return gamma_; }

  /// Noise-free response at frequency index k.
  Eigen::VectorXd evaluate(int k, const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& linear_matrix(int k) const;
  const Eigen::VectorXd& linear_offset(int k) const;

 private:
  void check_frequency(int k) const;

  double gamma_ = 0.0;
  int obs_dim_ = 0;
  int num_angles_ = 0;
  std::vector<Eigen::MatrixXd> a_;
  std::vector<Eigen::VectorXd> y0_;
  Eigen::MatrixXd quad_dir_;    // one unit direction per channel
  Eigen::MatrixXd quad_phase_;  // per-channel angle/frequency phases
};

}  // namespace eminv
