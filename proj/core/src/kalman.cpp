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

#include "eminv/kalman.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <string>

#include "eminv/errors.hpp"
#include "eminv/gaussian.hpp"

namespace eminv {

namespace {

/// B · Σ⁻¹ for symmetric PSD Σ. Cholesky when Σ is definite; otherwise an
/// eigendecomposition pseudo-solve that inverts only the supported directions.
Eigen::MatrixXd solve_spd_right(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) {
    return llt.solve(b.transpose()).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) {
    throw NumericError("smoother: eigendecomposition of a predicted covariance failed");
  }
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  if (lam.minCoeff() < -1e-9 * scale) {
    throw NumericError("smoother: predicted covariance is indefinite");
  }
  Eigen::VectorXd inv(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    inv[i] = lam[i] > 1e-12 * scale ? 1.0 / lam[i] : 0.0;
  }
  return b * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

void check_filter_inputs(const std::vector<MarginalPrior>& priors,
                         const std::vector<TransitionModel>& transitions,
                         const std::vector<LinearObservationModel>& obs,
                         const std::vector<Eigen::VectorXd>& measurements) {
  if (priors.empty()) throw ValidationError("filter needs at least one frequency");
  if (transitions.size() + 1 != priors.size()) {
    throw ValidationError("filter needs one transition between consecutive frequencies");
  }
  if (obs.size() != priors.size() || measurements.size() != priors.size()) {
    throw ValidationError("filter needs one observation model and measurement per frequency");
  }
}

}  // namespace

FilterOutput kalman_filter(const std::vector<MarginalPrior>& priors,
                           const std::vector<TransitionModel>& transitions,
                           const std::vector<LinearObservationModel>& observation_models,
                           const std::vector<Eigen::VectorXd>& measurements) {
  check_filter_inputs(priors, transitions, observation_models, measurements);
  const int num_freq = static_cast<int>(priors.size());
  const Eigen::Index dim = priors[0].mean.size();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);

  FilterOutput out;
  out.predicted.reserve(static_cast<std::size_t>(num_freq));
  out.filtered.reserve(static_cast<std::size_t>(num_freq));

  Eigen::VectorXd x = priors[0].mean;
  Eigen::MatrixXd p = priors[0].cov.matrix();
  for (int k = 0; k < num_freq; ++k) {
    out.predicted.push_back(GaussianBelief{x, p, k});

    const auto& model = observation_models[static_cast<std::size_t>(k)];
    const Eigen::VectorXd innovation =
        measurements[static_cast<std::size_t>(k)] - model.a * x - model.y0;
    const Eigen::MatrixXd ap = model.a * p;
    const Eigen::MatrixXd s = symmetrize(ap * model.a.transpose() + model.r.matrix());
    Eigen::LLT<Eigen::MatrixXd> chol(s);
    if (chol.info() != Eigen::Success) {
      throw NumericError("filter: innovation covariance not positive definite at frequency " +
                         std::to_string(k));
    }
    const Eigen::VectorXd u = chol.matrixL().solve(innovation);
    const double log_det = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
    out.log_likelihood -=
        0.5 * (static_cast<double>(s.rows()) * std::log(2.0 * std::numbers::pi) + log_det +
               u.squaredNorm());

    const Eigen::MatrixXd gain = chol.solve(ap).transpose();  // P Aᵀ S⁻¹
    x += gain * innovation;
    const Eigen::MatrixXd j = identity - gain * model.a;
    p = symmetrize(j * p * j.transpose() +
                   gain * model.r.matrix() * gain.transpose());  // Joseph form
    out.filtered.push_back(GaussianBelief{x, p, k});

    if (k + 1 < num_freq) {
      const auto& t = transitions[static_cast<std::size_t>(k)];
      x = t.m * x + t.b;
      p = symmetrize(t.m * p * t.m.transpose() + t.q);
    }
  }
  return out;
}

std::vector<GaussianBelief> rts_smoother(const FilterOutput& filter,
                                         const std::vector<TransitionModel>& transitions) {
  const std::size_t num_freq = filter.filtered.size();
  if (num_freq == 0) throw ValidationError("smoother: empty filter output");
  if (transitions.size() + 1 != num_freq || filter.predicted.size() != num_freq) {
    throw ValidationError("smoother: filter output and transitions are inconsistent");
  }
  std::vector<GaussianBelief> smoothed(filter.filtered);
  for (std::size_t k = num_freq - 1; k-- > 0;) {
    const auto& t = transitions[k];
    const GaussianBelief& f = filter.filtered[k];
    const GaussianBelief& pred = filter.predicted[k + 1];
    const Eigen::MatrixXd gain = solve_spd_right(pred.cov, f.cov * t.m.transpose());
    smoothed[k].mean = f.mean + gain * (smoothed[k + 1].mean - pred.mean);
    smoothed[k].cov =
        symmetrize(f.cov + gain * (smoothed[k + 1].cov - pred.cov) * gain.transpose());
  }
  return smoothed;
}

std::vector<Eigen::VectorXd> backward_sample(const FilterOutput& filter,
                                             const std::vector<TransitionModel>& transitions,
                                             RandomStream& rng) {
  const std::size_t num_freq = filter.filtered.size();
  if (num_freq == 0) throw ValidationError("backward_sample: empty filter output");
  if (transitions.size() + 1 != num_freq) {
    throw ValidationError("backward_sample: filter output and transitions are inconsistent");
  }
  const Eigen::Index dim = filter.filtered[0].mean.size();
  std::vector<Eigen::VectorXd> draw(num_freq);
  const GaussianBelief& last = filter.filtered[num_freq - 1];
  draw[num_freq - 1] = last.mean + psd_sqrt(last.cov) * rng.normal_vector(dim);
  for (std::size_t k = num_freq - 1; k-- > 0;) {
    const auto& t = transitions[k];
    const GaussianBelief& f = filter.filtered[k];
    const GaussianBelief& pred = filter.predicted[k + 1];
    const Eigen::MatrixXd gain = solve_spd_right(pred.cov, f.cov * t.m.transpose());
    const Eigen::VectorXd mean = f.mean + gain * (draw[k + 1] - pred.mean);
    const Eigen::MatrixXd cov = symmetrize(f.cov - gain * pred.cov * gain.transpose());
    // A deterministic transition cancels the subtraction above to round-off;
    // judging negativity against f.cov's scale keeps that case at zero instead
    // of rejecting a residual whose own largest eigenvalue is already noise.
    draw[k] = mean + psd_sqrt(cov, 1e-12, 1e-9, f.cov.norm()) * rng.normal_vector(dim);
  }
  return draw;
}

FilterOutput filter_for_rho(const InverseProblem& problem, const CorrelationParam& rho) {
  return kalman_filter(problem.priors(), problem.transitions(rho),
                       problem.observation_models(), problem.measurements());
}

double log_likelihood(const InverseProblem& problem, const CorrelationParam& rho) {
  return filter_for_rho(problem, rho).log_likelihood;
}

}  // namespace eminv
