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

#include "eminv/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "eminv/errors.hpp"

namespace eminv {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

SpdMatrix::SpdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw ValidationError("SpdMatrix: matrix must be square and non-empty");
  }
  if (!is_symmetric(m_)) {
    throw ValidationError("SpdMatrix: matrix is not symmetric");
  }
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("SpdMatrix: matrix is not positive definite");
  }
}

double SpdMatrix::log_det() const {
  // log det P = 2 Σ log L_ii
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

SqrtMatrix::SqrtMatrix(Eigen::MatrixXd h) : h_(std::move(h)) {
  if (h_.rows() == 0 || h_.rows() != h_.cols()) {
    throw ValidationError("SqrtMatrix: matrix must be square and non-empty");
  }
  if (!is_symmetric(h_, 1e-10)) {
    throw ValidationError("SqrtMatrix: matrix is not symmetric");
  }
}

GaussianDist::GaussianDist(Eigen::VectorXd mean_in, SpdMatrix cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
  if (mean.size() != cov.dim()) {
    throw ValidationError("GaussianDist: mean and covariance dimensions differ");
  }
}

SqrtMatrix spd_sqrt(const SpdMatrix& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.matrix());
  if (es.info() != Eigen::Success) {
    throw NumericError("spd_sqrt: eigendecomposition failed");
  }
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lam_max = lam.maxCoeff();
  if (lam_max <= 0.0 || lam.minCoeff() <= 1e-12 * lam_max) {
    throw NotPositiveDefiniteError(
        "spd_sqrt: eigenvalue at or below 1e-12 of the largest; matrix is numerically singular");
  }
  Eigen::MatrixXd h = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose();
  return SqrtMatrix(symmetrize(h));
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double rel_floor, double neg_tol,
                         double abs_scale) {
  if (!is_symmetric(m, 1e-9)) {
    throw NumericError("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  if (es.info() != Eigen::Success) {
    throw NumericError("psd_sqrt: eigendecomposition failed");
  }
  Eigen::VectorXd lam = es.eigenvalues();
  const double scale = std::max({lam.cwiseAbs().maxCoeff(), abs_scale, 1e-300});
  if (lam.minCoeff() < -neg_tol * scale) {
    throw NumericError("psd_sqrt: matrix has a significantly negative eigenvalue");
  }
  const double floor = rel_floor * scale;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    lam[i] = lam[i] > floor ? std::sqrt(lam[i]) : 0.0;
  }
  return symmetrize(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

std::vector<Eigen::VectorXd> sample_mvn(const GaussianDist& dist, int n, RandomStream& rng) {
  if (n < 0) throw ValidationError("sample_mvn: sample count must be non-negative");
  const Eigen::MatrixXd l = dist.cov.cholesky().matrixL();
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(dist.mean + l * rng.normal_vector(dist.dim()));
  }
  return out;
}

double log_mvn_density(const Eigen::VectorXd& x, const GaussianDist& dist) {
  return log_mvn_density(x, dist.mean, dist.cov.cholesky());
}

double log_mvn_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::LLT<Eigen::MatrixXd>& chol) {
  if (x.size() != mean.size()) {
    throw ValidationError("log_mvn_density: point and mean dimensions differ");
  }
  const Eigen::VectorXd u =
      chol.matrixL().solve(x - mean);  // L u = x − μ, so uᵀu = (x−μ)ᵀ Σ⁻¹ (x−μ)
  const double log_det = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + u.squaredNorm());
}

}  // namespace eminv
