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
#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eminv/kalman.hpp"
#include "eminv/layout.hpp"
#include "eminv/metamodel.hpp"
#include "eminv/prior.hpp"
#include "eminv/problem.hpp"
#include "eminv/random.hpp"
#include "eminv/smc.hpp"

namespace eminv::testing {

// ---------------------------------------------------------------------------
// Random fixtures. These deliberately avoid the library's own construction
// paths where an independent formulation exists.

inline Eigen::MatrixXd random_matrix(int rows, int cols, RandomStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline Eigen::MatrixXd random_spd(int dim, RandomStream& rng) {
  const Eigen::MatrixXd a = random_matrix(dim, dim, rng);
  return a * a.transpose() + 0.5 * static_cast<double>(dim) * Eigen::MatrixXd::Identity(dim, dim);
}

/// A randomized per-frequency prior family over one layout. Block structure
/// is preserved (it is what makes the frequency transition exact), but means
/// and scales drift with k so nothing is accidentally constant.
inline std::vector<MarginalPrior> random_priors(const BlockLayout& layout, int num_frequencies,
                                                RandomStream& rng) {
  std::vector<MarginalPrior> priors;
  priors.reserve(static_cast<std::size_t>(num_frequencies));
  for (int k = 0; k < num_frequencies; ++k) {
    PriorSpec spec;
    spec.reference.resize(layout.num_blocks(), kNumProperties);
    for (int b = 0; b < layout.num_blocks(); ++b) {
      for (int p = 0; p < kNumProperties; ++p) {
        spec.reference(b, p) = 1.0 + 3.0 * rng.uniform() + 0.1 * rng.normal();
      }
    }
    spec.sigma_abs = 0.05 + 0.2 * rng.uniform();
    spec.sigma_rel = 0.1 * rng.uniform();
    spec.spatial_correlation = 0.9 * rng.uniform();
    priors.push_back(build_spatial_prior(layout, spec));
  }
  return priors;
}

inline Eigen::VectorXd random_rho_values(RhoCase rho_case, const BlockLayout& layout,
                                         RandomStream& rng) {
  Eigen::VectorXd v(rho_dim(rho_case, layout));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 0.05 + 0.9 * rng.uniform();
  return v;
}

struct RandomScenario {
  InverseProblem problem;
  CorrelationParam truth_rho;
  std::vector<Eigen::VectorXd> truth_state;
};

/// A small end-to-end random problem: block-structured priors, dense random
/// observation maps with diagonal-dominant noise, and measurements simulated
/// from a prior-process truth at a random ρ.
inline RandomScenario random_scenario(const BlockLayout& layout, int num_frequencies,
                                      int num_angles, RhoCase rho_case, RandomStream& rng,
                                      double noise = 0.1) {
  const int dim = layout.state_dim();
  const int obs_dim = kChannelsPerAngle * num_angles;
  auto priors = random_priors(layout, num_frequencies, rng);
  std::vector<LinearObservationModel> obs;
  obs.reserve(static_cast<std::size_t>(num_frequencies));
  for (int k = 0; k < num_frequencies; ++k) {
    Eigen::MatrixXd a = random_matrix(obs_dim, dim, rng) / std::sqrt(static_cast<double>(dim));
    Eigen::VectorXd y0 = random_matrix(obs_dim, 1, rng);
    Eigen::MatrixXd r = noise * noise *
                        (random_spd(obs_dim, rng) / static_cast<double>(obs_dim)
                         + Eigen::MatrixXd::Identity(obs_dim, obs_dim));
    obs.push_back(LinearObservationModel{std::move(a), std::move(y0),
                                         SpdMatrix(symmetrize(r))});
  }
  const CorrelationParam rho{rho_case, random_rho_values(rho_case, layout, rng)};
  auto truth = sample_prior_trajectory(rho, layout, priors, rng);
  std::vector<Eigen::VectorXd> measurements;
  measurements.reserve(static_cast<std::size_t>(num_frequencies));
  for (int k = 0; k < num_frequencies; ++k) {
    const auto& m = obs[static_cast<std::size_t>(k)];
    measurements.push_back(m.a * truth[static_cast<std::size_t>(k)] + m.y0 +
                           m.r.cholesky().matrixL() * rng.normal_vector(obs_dim));
  }
  return RandomScenario{
      InverseProblem(layout, std::move(priors), std::move(obs), std::move(measurements),
                     rho_case),
      rho, std::move(truth)};
}

// ---------------------------------------------------------------------------
// Dense joint-Gaussian conditional oracle. Builds the full (X, Y) joint by
// explicit block assembly — Cov(X_i, X_j) = H_i D^{|i−j|} H_j — and
// conditions on Y with one LDLT solve. Independent of the Kalman recursion.

struct DenseConditional {
  std::vector<Eigen::VectorXd> mean;  // E[X_k | Y], per frequency
  std::vector<Eigen::MatrixXd> cov;   // Cov[X_k | Y], per frequency
  double log_likelihood = 0.0;        // log p(Y) from the dense joint
};

inline DenseConditional dense_conditional_oracle(const InverseProblem& problem,
                                                 const CorrelationParam& rho) {
  const auto& priors = problem.priors();
  const auto& obs = problem.observation_models();
  const int num_freq = static_cast<int>(priors.size());
  const int dim = problem.layout().state_dim();
  const Eigen::VectorXd d = expand_rho(rho, problem.layout());

  const int nx = num_freq * dim;
  Eigen::MatrixXd cov_x(nx, nx);
  Eigen::VectorXd mean_x(nx);
  for (int i = 0; i < num_freq; ++i) {
    mean_x.segment(i * dim, dim) = priors[static_cast<std::size_t>(i)].mean;
    for (int j = 0; j < num_freq; ++j) {
      Eigen::VectorXd dpow = Eigen::VectorXd::Ones(dim);
      for (int p = 0; p < std::abs(i - j); ++p) dpow.array() *= d.array();
      cov_x.block(i * dim, j * dim, dim, dim) =
          priors[static_cast<std::size_t>(i)].sqrt.matrix() * dpow.asDiagonal() *
          priors[static_cast<std::size_t>(j)].sqrt.matrix();
    }
  }
  cov_x = (0.5 * (cov_x + cov_x.transpose())).eval();

  int ny = 0;
  for (const auto& m : obs) ny += static_cast<int>(m.a.rows());
  Eigen::MatrixXd a_blk = Eigen::MatrixXd::Zero(ny, nx);
  Eigen::VectorXd y0_blk(ny);
  Eigen::MatrixXd r_blk = Eigen::MatrixXd::Zero(ny, ny);
  Eigen::VectorXd y(ny);
  int at = 0;
  for (int k = 0; k < num_freq; ++k) {
    const auto& m = obs[static_cast<std::size_t>(k)];
    const int rows = static_cast<int>(m.a.rows());
    a_blk.block(at, k * dim, rows, dim) = m.a;
    y0_blk.segment(at, rows) = m.y0;
    r_blk.block(at, at, rows, rows) = m.r.matrix();
    y.segment(at, rows) = problem.measurements()[static_cast<std::size_t>(k)];
    at += rows;
  }

  const Eigen::MatrixXd cov_xy = cov_x * a_blk.transpose();
  Eigen::MatrixXd cov_y = a_blk * cov_xy + r_blk;
  cov_y = (0.5 * (cov_y + cov_y.transpose())).eval();
  const Eigen::VectorXd mean_y = a_blk * mean_x + y0_blk;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_y);
  const Eigen::VectorXd resid = y - mean_y;
  const Eigen::VectorXd solve_resid = ldlt.solve(resid);
  const Eigen::MatrixXd gain = ldlt.solve(cov_xy.transpose()).transpose();

  DenseConditional out;
  const Eigen::VectorXd cmean = mean_x + cov_xy * solve_resid;
  const Eigen::MatrixXd ccov = cov_x - gain * cov_xy.transpose();
  out.mean.reserve(static_cast<std::size_t>(num_freq));
  out.cov.reserve(static_cast<std::size_t>(num_freq));
  for (int k = 0; k < num_freq; ++k) {
    out.mean.push_back(cmean.segment(k * dim, dim));
    Eigen::MatrixXd block = ccov.block(k * dim, k * dim, dim, dim);
    out.cov.push_back(0.5 * (block + block.transpose()));
  }
  double log_det = 0.0;
  const Eigen::VectorXd diag = ldlt.vectorD();
  for (Eigen::Index i = 0; i < diag.size(); ++i) log_det += std::log(diag[i]);
  out.log_likelihood = -0.5 * (static_cast<double>(ny) * std::log(2.0 * M_PI) + log_det +
                               resid.dot(solve_resid));
  return out;
}

// ---------------------------------------------------------------------------
// Chi-square survival function via the regularized incomplete gamma function
// (series for x < a+1, continued fraction otherwise).

inline double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// P(Chi2_dof > x).
inline double chi2_survival(double x, int dof) {
  const double a = 0.5 * dof;
  const double half = 0.5 * x;
  if (x <= 0.0) return 1.0;
  if (half < a + 1.0) return 1.0 - gamma_p_series(a, half);
  return gamma_q_cf(a, half);
}

// ---------------------------------------------------------------------------
// Deterministic grid quadrature over a scalar ρ: the reference posterior for
// the sampler. Uses only the filter/smoother as likelihood oracle — the SMC
// machinery itself is never involved.

struct QuadratureReference {
  Eigen::VectorXd grid;               // quadrature nodes on [0, 1]
  Eigen::VectorXd density;            // posterior density at the nodes
  Eigen::VectorXd mass;               // normalized node masses (trapezoid)
  double mean_rho = 0.0;
  std::vector<Eigen::VectorXd> mean_x;  // posterior state mean per frequency

  /// Bin masses on [0,1] matching a uniform histogram with `bins` bins.
  Eigen::VectorXd bin_mass(int bins) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(bins);
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      int b = static_cast<int>(grid[g] * bins);
      if (b >= bins) b = bins - 1;
      out[b] += mass[g];
    }
    return out;
  }
};

inline QuadratureReference quadrature_posterior(const InverseProblem& problem,
                                                const RhoPrior& prior, int points) {
  QuadratureReference ref;
  ref.grid = Eigen::VectorXd::LinSpaced(points, 0.0, 1.0);
  Eigen::VectorXd log_post(points);
  std::vector<std::vector<GaussianBelief>> smoothed(static_cast<std::size_t>(points));
  for (int g = 0; g < points; ++g) {
    Eigen::VectorXd value(1);
    value[0] = ref.grid[g];
    const CorrelationParam rho = problem.make_rho(value);
    const FilterOutput filter = filter_for_rho(problem, rho);
    const double lp = prior.log_density(value);
    log_post[g] = std::isfinite(lp) ? filter.log_likelihood + lp
                                    : -std::numeric_limits<double>::infinity();
    smoothed[static_cast<std::size_t>(g)] =
        rts_smoother(filter, problem.transitions(rho));
  }
  // Trapezoid masses with log-sum-exp normalization.
  Eigen::VectorXd log_w = log_post;
  log_w[0] += std::log(0.5);
  log_w[points - 1] += std::log(0.5);
  const double m = log_w.maxCoeff();
  Eigen::VectorXd w = (log_w.array() - m).exp();
  w /= w.sum();
  ref.mass = w;
  ref.density = w * static_cast<double>(points - 1);  // node spacing is 1/(points−1)
  ref.density[0] *= 2.0;
  ref.density[points - 1] *= 2.0;
  ref.mean_rho = w.dot(ref.grid);
  const int num_freq = static_cast<int>(problem.priors().size());
  ref.mean_x.assign(static_cast<std::size_t>(num_freq),
                    Eigen::VectorXd::Zero(problem.layout().state_dim()));
  for (int g = 0; g < points; ++g) {
    for (int k = 0; k < num_freq; ++k) {
      ref.mean_x[static_cast<std::size_t>(k)] +=
          w[g] * smoothed[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)].mean;
    }
  }
  return ref;
}

// ---------------------------------------------------------------------------
// Filesystem and process helpers for CLI-level tests.

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path() / "eminv_test_XXXXXX";
    std::string templ = base.string();
    if (!mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

#ifdef EMINV_CLI_PATH
inline CliResult run_cli(const std::string& args) {
  const TempDir capture;
  const auto log = capture.path() / "out.log";
  const std::string cmd =
      std::string(EMINV_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}
#endif

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace eminv::testing
