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

#include "eminv/metamodel.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "eminv/errors.hpp"
#include "eminv/parallel.hpp"

namespace eminv {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& states) {
  Eigen::MatrixXd design(states.rows(), states.cols() + 1);
  design << states, Eigen::VectorXd::Ones(states.rows());
  return design;
}

/// q-quantile of a sorted vector with linear interpolation.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

void LinearObservationModel::validate() const {
  if (a.rows() == 0 || a.cols() == 0) {
    throw ValidationError("observation model matrix must be non-empty");
  }
  if (y0.size() != a.rows() || r.dim() != a.rows()) {
    throw ValidationError("observation model offset/noise dimensions do not match the matrix");
  }
}

void TrainingSet::validate() const {
  if (states.rows() != observations.rows()) {
    throw ValidationError("training states and observations must pair up row by row");
  }
  if (states.rows() <= states.cols() + 1) {
    throw ValidationError("need more training pairs than regressors (state_dim + 1)");
  }
  if (observations.cols() == 0 || states.cols() == 0) {
    throw ValidationError("training set has empty rows");
  }
}

MetamodelFit fit_linear_metamodel(const TrainingSet& data) {
  data.validate();
  const Eigen::Index state_dim = data.states.cols();
  const Eigen::Index p = state_dim + 1;
  const Eigen::MatrixXd design = with_intercept(data.states);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p) {
    const auto& perm = qr.colsPermutation().indices();
    std::string cols;
    for (Eigen::Index i = qr.rank(); i < p; ++i) {
      if (!cols.empty()) cols += ", ";
      const Eigen::Index c = perm[i];
      cols += (c == state_dim) ? "intercept" : ("state column " + std::to_string(c));
    }
    throw ValidationError("training design is rank-deficient in: " + cols);
  }

  const Eigen::MatrixXd coef = qr.solve(data.observations);  // p × obs_dim
  MetamodelFit fit;
  fit.a = coef.topRows(state_dim).transpose();
  fit.y0 = coef.row(state_dim).transpose();
  fit.residuals = data.observations - design * coef;
  return fit;
}

ResidualCovariance residual_covariance(const Eigen::MatrixXd& residuals, int num_regressors) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index m = residuals.cols();
  const Eigen::Index dof = n - num_regressors;
  if (num_regressors < 1 || dof < 1) {
    throw ValidationError("residual_covariance: need more residual rows than regressors");
  }
  ResidualCovariance out;
  Eigen::MatrixXd full =
      symmetrize(residuals.transpose() * residuals / static_cast<double>(dof));
  if (dof < m) {
    out.diagonal_only = true;
    out.cov = full.diagonal().asDiagonal();
  } else {
    out.cov = std::move(full);
  }
  out.positive_definite =
      Eigen::LLT<Eigen::MatrixXd>(out.cov).info() == Eigen::Success &&
      out.cov.diagonal().minCoeff() > 0.0;
  return out;
}

BootstrapSummary bootstrap_linearity_error(const TrainingSet& data, int replicates,
                                           std::uint64_t seed, int threads) {
  data.validate();
  if (replicates < 2) throw ValidationError("bootstrap needs at least two replicates");
  const Eigen::Index n = data.states.rows();
  const Eigen::Index state_dim = data.states.cols();
  const Eigen::Index p = state_dim + 1;
  const Eigen::Index obs_dim = data.observations.cols();

  struct Refit {
    Eigen::MatrixXd a;
    Eigen::VectorXd y0;
  };
  std::vector<std::optional<Refit>> refits(static_cast<std::size_t>(replicates));

  parallel_for(replicates, threads, [&](int r) {
    RandomStream rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(r)));
    Eigen::MatrixXd design(n, p);
    Eigen::MatrixXd obs(n, obs_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto j = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
      j = std::min(j, n - 1);
      design.row(i) << data.states.row(j), 1.0;
      obs.row(i) = data.observations.row(j);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) return;  // leave the slot empty; counted below
    const Eigen::MatrixXd coef = qr.solve(obs);
    refits[static_cast<std::size_t>(r)] =
        Refit{coef.topRows(state_dim).transpose(), coef.row(state_dim).transpose()};
  });

  BootstrapSummary out;
  out.replicates = replicates;
  for (const auto& f : refits) {
    if (!f) ++out.skipped;
  }
  if (out.skipped * 10 > replicates) {
    throw NumericError("bootstrap skipped " + std::to_string(out.skipped) + " of " +
                       std::to_string(replicates) +
                       " replicates for rank deficiency (more than 10%)");
  }
  const int kept = replicates - out.skipped;
  if (kept < 2) throw NumericError("bootstrap kept fewer than two replicates");

  out.a_sd.resize(obs_dim, state_dim);
  out.a_lo.resize(obs_dim, state_dim);
  out.a_hi.resize(obs_dim, state_dim);
  out.y0_sd.resize(obs_dim);
  out.y0_lo.resize(obs_dim);
  out.y0_hi.resize(obs_dim);

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(kept));
  auto summarize = [&](auto&& pick, double& sd, double& lo, double& hi) {
    values.clear();
    for (const auto& f : refits) {
      if (f) values.push_back(pick(*f));
    }
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(kept);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    sd = std::sqrt(ss / static_cast<double>(kept - 1));
    std::sort(values.begin(), values.end());
    lo = quantile_sorted(values, 0.025);
    hi = quantile_sorted(values, 0.975);
  };

  for (Eigen::Index i = 0; i < obs_dim; ++i) {
    for (Eigen::Index j = 0; j < state_dim; ++j) {
      summarize([&](const Refit& f) { return f.a(i, j); }, out.a_sd(i, j), out.a_lo(i, j),
                out.a_hi(i, j));
    }
    summarize([&](const Refit& f) { return f.y0[i]; }, out.y0_sd[i], out.y0_lo[i],
              out.y0_hi[i]);
  }
  return out;
}

Eigen::VectorXd observe(const LinearObservationModel& model, const Eigen::VectorXd& x,
                        RandomStream& rng) {
  model.validate();
  if (x.size() != model.a.cols()) {
    throw ValidationError("observe: state dimension does not match the model");
  }
  return model.a * x + model.y0 +
         model.r.cholesky().matrixL() * rng.normal_vector(model.a.rows());
}

SyntheticSolver::SyntheticSolver(const BlockLayout& layout, int num_frequencies,
                                 int num_angles, double gamma, std::uint64_t seed)
    : gamma_(gamma), num_angles_(num_angles) {
  if (num_frequencies < 1) throw ValidationError("synthetic solver needs at least one frequency");
  if (num_angles < 1) throw ValidationError("synthetic solver needs at least one angle");
  if (!std::isfinite(gamma)) throw ValidationError("synthetic solver gamma must be finite");

  const int dim = layout.state_dim();
  obs_dim_ = kChannelsPerAngle * num_angles;
  // Enough harmonics that the union of the response's sensitivity directions
  // over all angles and frequencies spans the state space: each channel
  // contributes 1 + 4·(H − 1) independent state directions across the
  // angle/frequency product basis, so H grows with the state dimension. A
  // stand-in for real physics must not have structurally unobservable
  // directions; smoothness along both axes is preserved for any H.
  const int kHarmonics =
      std::max(3, 1 + (layout.state_dim() / kChannelsPerAngle + 3) / 4);
  const double kTwoPi = 2.0 * std::numbers::pi;
  RandomStream rng(derive_seed(seed, "synthetic_solver"));

  // Low-order harmonic expansions in angle and frequency keep the response
  // smooth along both axes. All tables are drawn up front in a fixed order so
  // the affine part does not depend on gamma.
  struct Harmonic {
    double amp, phase_angle, phase_freq;
  };
  std::vector<Harmonic> a_coef(
      static_cast<std::size_t>(kChannelsPerAngle * dim * kHarmonics));
  for (auto& h : a_coef) {
    h = {rng.normal() / std::sqrt(double(kHarmonics)), kTwoPi * rng.uniform(),
         kTwoPi * rng.uniform()};
  }
  std::vector<Harmonic> y0_coef(static_cast<std::size_t>(kChannelsPerAngle * kHarmonics));
  for (auto& h : y0_coef) {
    h = {rng.normal() / std::sqrt(double(kHarmonics)), kTwoPi * rng.uniform(),
         kTwoPi * rng.uniform()};
  }
  quad_dir_.resize(kChannelsPerAngle, dim);
  for (int c = 0; c < kChannelsPerAngle; ++c) {
    quad_dir_.row(c) = rng.normal_vector(dim).normalized();
  }
  quad_phase_.resize(kChannelsPerAngle, 2);
  for (int c = 0; c < kChannelsPerAngle; ++c) {
    quad_phase_(c, 0) = kTwoPi * rng.uniform();
    quad_phase_(c, 1) = kTwoPi * rng.uniform();
  }

  a_.reserve(static_cast<std::size_t>(num_frequencies));
  y0_.reserve(static_cast<std::size_t>(num_frequencies));
  auto angle_arg = [&](int h, int m) {
    return kTwoPi * h * (m + 0.5) / static_cast<double>(num_angles);
  };
  auto freq_arg = [&](int h, int k) {
    return std::numbers::pi * h * (k + 0.5) / static_cast<double>(num_frequencies);
  };
  for (int k = 0; k < num_frequencies; ++k) {
    Eigen::MatrixXd a(obs_dim_, dim);
    Eigen::VectorXd y0(obs_dim_);
    for (int m = 0; m < num_angles; ++m) {
      for (int c = 0; c < kChannelsPerAngle; ++c) {
        const int row = kChannelsPerAngle * m + c;
        for (int j = 0; j < dim; ++j) {
          double v = 0.0;
          for (int h = 0; h < kHarmonics; ++h) {
            const Harmonic& hc =
                a_coef[static_cast<std::size_t>((c * dim + j) * kHarmonics + h)];
            v += hc.amp * std::cos(angle_arg(h, m) + hc.phase_angle) *
                 std::cos(freq_arg(h, k) + hc.phase_freq);
          }
          a(row, j) = v;
        }
        double v0 = 0.0;
        for (int h = 0; h < kHarmonics; ++h) {
          const Harmonic& hc = y0_coef[static_cast<std::size_t>(c * kHarmonics + h)];
          v0 += hc.amp * std::cos(angle_arg(h, m) + hc.phase_angle) *
                std::cos(freq_arg(h, k) + hc.phase_freq);
        }
        y0[row] = v0;
      }
    }
    a_.push_back(std::move(a));
    y0_.push_back(std::move(y0));
  }
}

void SyntheticSolver::check_frequency(int k) const {
  if (k < 0 || k >= num_frequencies()) {
    throw ValidationError("synthetic solver: frequency index out of range");
  }
}

Eigen::VectorXd SyntheticSolver::evaluate(int k, const Eigen::VectorXd& x) const {
  check_frequency(k);
  if (x.size() != a_[static_cast<std::size_t>(k)].cols()) {
    throw ValidationError("synthetic solver: state dimension mismatch");
  }
  Eigen::VectorXd y = a_[static_cast<std::size_t>(k)] * x + y0_[static_cast<std::size_t>(k)];
  if (gamma_ != 0.0) {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const double dim_scale = std::sqrt(static_cast<double>(x.size()));
    for (int c = 0; c < kChannelsPerAngle; ++c) {
      const double t = quad_dir_.row(c).dot(x);
      const double q = t * t / dim_scale;
      for (int m = 0; m < num_angles_; ++m) {
        const double w =
            1.0 + 0.5 * std::cos(kTwoPi * (m + 0.5) / num_angles_ + quad_phase_(c, 0)) *
                      std::cos(std::numbers::pi * (k + 0.5) / num_frequencies() +
                               quad_phase_(c, 1));
        y[kChannelsPerAngle * m + c] += gamma_ * w * q;
      }
    }
  }
  return y;
}

const Eigen::MatrixXd& SyntheticSolver::linear_matrix(int k) const {
  check_frequency(k);
  return a_[static_cast<std::size_t>(k)];
}

const Eigen::VectorXd& SyntheticSolver::linear_offset(int k) const {
  check_frequency(k);
  return y0_[static_cast<std::size_t>(k)];
}

}  // namespace eminv
