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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "eminv/random.hpp"

namespace eminv {

/// (M + Mᵀ)/2. Applied after every covariance recursion step so roundoff
/// asymmetry cannot accumulate.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// True when max|M − Mᵀ| ≤ rel_tol · max(1, max|M|).
bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

/// A symmetric positive definite matrix, validated once at construction and
/// carrying its Cholesky factorization. Construction throws ValidationError
/// on asymmetry and NotPositiveDefiniteError when the factorization fails.
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const { return llt_; }
  double log_det() const;

 private:
  Eigen::MatrixXd m_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// The unique symmetric positive definite square root H of an SpdMatrix,
/// H·H = P. Symmetry (rather than a triangular factor) matters wherever H is
/// multiplied by a commuting diagonal scaling.
class SqrtMatrix {
 public:
  explicit SqrtMatrix(Eigen::MatrixXd h);
  const Eigen::MatrixXd& matrix() const { return h_; }
  Eigen::Index dim() const { return h_.rows(); }

 private:
  Eigen::MatrixXd h_;
};

/// A multivariate Gaussian with strictly positive definite covariance.
struct GaussianDist {
  Eigen::VectorXd mean;
  SpdMatrix cov;

  GaussianDist(Eigen::VectorXd mean_in, SpdMatrix cov_in);
  Eigen::Index dim() const { return mean.size(); }
};

/// Symmetric PD square root via eigendecomposition. Eigenvalues at or below
/// 1e-12 · λ_max are rejected (NotPositiveDefiniteError), never clamped: a
/// correlation model that degenerates numerically should fail loudly.
SqrtMatrix spd_sqrt(const SpdMatrix& p);

/// Square root of a symmetric positive *semi*definite matrix. Eigenvalues in
/// [−neg_tol·scale, rel_floor·λ_max] are treated as exactly zero; anything
/// more negative throws NumericError. Used for sampling from conditionals
/// that are legitimately degenerate (zero innovation noise). `scale` is the
/// largest |eigenvalue|, but never less than `abs_scale`: a caller forming the
/// matrix as a difference of large terms passes their magnitude here so that a
/// residual that cancelled to round-off is read as zero, not as indefinite.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double rel_floor = 1e-12,
                         double neg_tol = 1e-9, double abs_scale = 0.0);

/// Draws n samples x = μ + L·z with L the (lower) Cholesky factor and z a
/// fresh standard normal vector per sample, consumed in index order.
std::vector<Eigen::VectorXd> sample_mvn(const GaussianDist& dist, int n, RandomStream& rng);

/// Log density of N(mean, cov) at x.
double log_mvn_density(const Eigen::VectorXd& x, const GaussianDist& dist);

/// Same, from a precomputed Cholesky factorization of the covariance.
double log_mvn_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::LLT<Eigen::MatrixXd>& chol);

}  // namespace eminv
