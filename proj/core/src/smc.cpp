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

#include "eminv/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "eminv/errors.hpp"
#include "eminv/kalman.hpp"
#include "eminv/parallel.hpp"

namespace eminv {

namespace {

constexpr double kLogitClamp = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

std::string format_rho(const Eigen::VectorXd& rho) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (i) os << ", ";
    os << rho[i];
  }
  os << "]";
  return os.str();
}

double ess_of_unnormalized(const Eigen::VectorXd& w) {
  const double s = w.sum();
  const double s2 = w.squaredNorm();
  if (!(s > 0.0) || !(s2 > 0.0)) return 0.0;
  return s * s / s2;
}

}  // namespace

RhoPrior::RhoPrior(std::vector<std::array<double, 2>> shapes) : shapes_(std::move(shapes)) {
  if (shapes_.empty()) throw ValidationError("rho prior needs at least one component");
  log_norm_.reserve(shapes_.size());
  for (const auto& [a, b] : shapes_) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw ValidationError("rho prior shapes must be positive and finite");
    }
    log_norm_.push_back(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b));
  }
}

RhoPrior RhoPrior::uniform(int dim) {
  if (dim < 1) throw ValidationError("rho prior needs at least one component");
  return RhoPrior(std::vector<std::array<double, 2>>(static_cast<std::size_t>(dim), {1.0, 1.0}));
}

RhoPrior RhoPrior::beta(int dim, double a, double b) {
  if (dim < 1) throw ValidationError("rho prior needs at least one component");
  return RhoPrior(std::vector<std::array<double, 2>>(static_cast<std::size_t>(dim), {a, b}));
}

Eigen::VectorXd RhoPrior::sample(RandomStream& rng) const {
  Eigen::VectorXd rho(dim());
  for (std::size_t c = 0; c < shapes_.size(); ++c) {
    const auto& [a, b] = shapes_[c];
    rho[static_cast<Eigen::Index>(c)] =
        (a == 1.0 && b == 1.0) ? rng.uniform() : rng.beta(a, b);
  }
  return rho;
}

double RhoPrior::log_density(const Eigen::VectorXd& rho) const {
  if (rho.size() != dim()) throw ValidationError("rho prior: dimension mismatch");
  double sum = 0.0;
  for (std::size_t c = 0; c < shapes_.size(); ++c) {
    const double x = rho[static_cast<Eigen::Index>(c)];
    if (!(x >= 0.0) || !(x <= 1.0)) return -kInf;
    const auto& [a, b] = shapes_[c];
    if (a != 1.0) {
      if (x == 0.0) return a > 1.0 ? -kInf : kInf;
      sum += (a - 1.0) * std::log(x);
    }
    if (b != 1.0) {
      if (x == 1.0) return b > 1.0 ? -kInf : kInf;
      sum += (b - 1.0) * std::log1p(-x);
    }
    sum += log_norm_[c];
  }
  return sum;
}

double RhoPrior::log_density_logit(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw ValidationError("rho prior: dimension mismatch");
  double sum = 0.0;
  for (std::size_t c = 0; c < shapes_.size(); ++c) {
    const auto& [a, b] = shapes_[c];
    const double zc = z[static_cast<Eigen::Index>(c)];
    // log Beta(σ(z); a, b) + log σ'(z) = −a·softplus(−z) − b·softplus(z) − log B(a,b)
    sum += -a * softplus(-zc) - b * softplus(zc) + log_norm_[c];
  }
  return sum;
}

Eigen::VectorXd logit_vec(const Eigen::VectorXd& rho) {
  Eigen::VectorXd z(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    const double x = std::clamp(rho[i], kLogitClamp, 1.0 - kLogitClamp);
    z[i] = std::log(x) - std::log1p(-x);
  }
  return z;
}

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& z) {
  Eigen::VectorXd rho(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    rho[i] = z[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-z[i]))
                         : std::exp(z[i]) / (1.0 + std::exp(z[i]));
  }
  return rho;
}

double mh_log_acceptance(double alpha, const RhoPrior& prior, const Eigen::VectorXd& z_cur,
                         double log_lik_cur, const Eigen::VectorXd& z_prop,
                         double log_lik_prop) {
  return alpha * (log_lik_prop - log_lik_cur) + prior.log_density_logit(z_prop) -
         prior.log_density_logit(z_cur);
}

void SmcConfig::validate() const {
  if (particles < 2) throw ValidationError("smc needs at least two particles");
  if (!(ess_fraction > 0.0) || !(ess_fraction < 1.0)) {
    throw ValidationError("smc ess_fraction must lie in (0, 1)");
  }
  if (mh_steps < 0) throw ValidationError("smc mh_steps must be non-negative");
  if (!(step_scale > 0.0)) throw ValidationError("smc step_scale must be positive");
  if (!(target_acceptance > 0.0) || !(target_acceptance < 1.0)) {
    throw ValidationError("smc target_acceptance must lie in (0, 1)");
  }
  if (max_generations < 1) throw ValidationError("smc max_generations must be at least one");
  if (threads < 0) throw ValidationError("smc threads must be non-negative");
}

double effective_sample_size(const Eigen::VectorXd& weights) {
  if (weights.size() == 0) throw ValidationError("effective_sample_size: empty weights");
  if ((weights.array() < 0.0).any()) {
    throw ValidationError("effective_sample_size: negative weight");
  }
  return ess_of_unnormalized(weights);
}

ParticleCloud init_cloud(const RhoPrior& prior, const LogLikelihood& log_lik,
                         const SmcConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = config.particles;
  ParticleCloud cloud;
  cloud.particles.resize(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));

  parallel_for(n, config.threads, [&](int i) {
    RandomStream rng(derive_seed(seed, "init", static_cast<std::uint64_t>(i)));
    Particle& p = cloud.particles[static_cast<std::size_t>(i)];
    p.rho = prior.sample(rng);
    try {
      p.log_lik = log_lik(p.rho);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (int i = 0; i < n; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      throw NumericError("initial likelihood evaluation failed at rho = " +
                         format_rho(cloud.particles[static_cast<std::size_t>(i)].rho) + ": " +
                         errors[static_cast<std::size_t>(i)]);
    }
  }
  cloud.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  cloud.alpha = 0.0;
  cloud.generation = 0;
  return cloud;
}

double next_temperature(const ParticleCloud& cloud, const SmcConfig& config) {
  if (!(cloud.alpha < 1.0)) {
    throw ValidationError("next_temperature: cloud already at temperature one");
  }
  const auto n = static_cast<Eigen::Index>(cloud.particles.size());
  Eigen::VectorXd log_lik(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_lik[i] = cloud.particles[static_cast<std::size_t>(i)].log_lik;
  }
  const Eigen::VectorXd log_w = cloud.weights.array().log();
  const double target = config.ess_fraction * static_cast<double>(config.particles);

  auto ess_at = [&](double alpha) {
    Eigen::VectorXd lw = log_w + (alpha - cloud.alpha) * log_lik;
    const double m = lw.maxCoeff();
    if (!std::isfinite(m)) return 0.0;
    return ess_of_unnormalized((lw.array() - m).exp());
  };

  if (ess_at(1.0) >= target) return 1.0;
  double lo = cloud.alpha;
  double hi = 1.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ess_at(mid) >= target ? lo : hi) = mid;
  }
  // lo == cloud.alpha means even infinitesimal increments undershoot the ESS
  // target; moving by the bracket width keeps the loop strictly advancing.
  return lo > cloud.alpha ? lo : hi;
}

void reweight(ParticleCloud& cloud, double new_alpha) {
  if (!(new_alpha >= cloud.alpha) || !(new_alpha <= 1.0)) {
    throw ValidationError("reweight: new temperature must lie in [current, 1]");
  }
  const auto n = static_cast<Eigen::Index>(cloud.particles.size());
  if (cloud.weights.size() != n || n == 0) {
    throw ValidationError("reweight: weights and particles are inconsistent");
  }
  Eigen::VectorXd lw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lw[i] = std::log(cloud.weights[i]) +
            (new_alpha - cloud.alpha) * cloud.particles[static_cast<std::size_t>(i)].log_lik;
  }
  const double m = lw.maxCoeff();
  if (!std::isfinite(m)) {
    throw NumericError("reweight: all particles have vanishing weight");
  }
  Eigen::VectorXd w = (lw.array() - m).exp();
  const double s = w.sum();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw NumericError("reweight: weight normalization failed");
  }
  cloud.weights = w / s;
  cloud.alpha = new_alpha;
}

void resample_systematic(ParticleCloud& cloud, RandomStream& rng) {
  const auto n = static_cast<Eigen::Index>(cloud.particles.size());
  if (n == 0 || cloud.weights.size() != n) {
    throw ValidationError("resample: weights and particles are inconsistent");
  }
  const double offset = rng.uniform();
  std::vector<Particle> resampled;
  resampled.reserve(static_cast<std::size_t>(n));
  Eigen::Index j = 0;
  double cum = cloud.weights[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + offset) / static_cast<double>(n);
    while (pos > cum && j + 1 < n) {
      ++j;
      cum += cloud.weights[j];
    }
    resampled.push_back(cloud.particles[static_cast<std::size_t>(j)]);
  }
  cloud.particles = std::move(resampled);
  cloud.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

MutationStats mh_mutate(ParticleCloud& cloud, const RhoPrior& prior,
                        const LogLikelihood& log_lik, const SmcConfig& config,
                        double step_scale, std::uint64_t seed) {
  const int n = static_cast<int>(cloud.particles.size());
  if (n == 0) throw ValidationError("mh_mutate: empty cloud");
  const double alpha = cloud.alpha;
  std::vector<MutationStats> slots(static_cast<std::size_t>(n));

  parallel_for(n, config.threads, [&](int i) {
    RandomStream rng(derive_seed(seed, "particle", static_cast<std::uint64_t>(i)));
    Particle& p = cloud.particles[static_cast<std::size_t>(i)];
    MutationStats& stat = slots[static_cast<std::size_t>(i)];
    Eigen::VectorXd z = logit_vec(p.rho);
    for (int step = 0; step < config.mh_steps; ++step) {
      const Eigen::VectorXd z_prop = z + step_scale * rng.normal_vector(z.size());
      const Eigen::VectorXd rho_prop = sigmoid_vec(z_prop);
      ++stat.proposals;
      double ll_prop = 0.0;
      bool ok = true;
      try {
        ll_prop = log_lik(rho_prop);
        if (std::isnan(ll_prop)) ok = false;
      } catch (const std::exception&) {
        ok = false;
      }
      // Always consume the acceptance uniform so the particle's draw sequence
      // does not depend on whether the evaluation succeeded.
      const double u = rng.uniform();
      if (!ok) {
        ++stat.failures;
        continue;
      }
      const double log_r = mh_log_acceptance(alpha, prior, z, p.log_lik, z_prop, ll_prop);
      if (std::log(u) < log_r) {
        z = z_prop;
        p.rho = rho_prop;
        p.log_lik = ll_prop;
        ++stat.accepts;
      }
    }
  });

  MutationStats total;
  for (const auto& s : slots) {
    total.proposals += s.proposals;
    total.accepts += s.accepts;
    total.failures += s.failures;
  }
  if (total.failures * 2 > total.proposals && total.proposals > 0) {
    throw NumericError("mh_mutate: " + std::to_string(total.failures) + " of " +
                       std::to_string(total.proposals) +
                       " proposal evaluations failed (more than half)");
  }
  return total;
}

namespace {

SmcResult run_smc_impl(const RhoPrior& prior, const LogLikelihood& log_lik,
                       const SmcConfig& config, std::uint64_t seed,
                       const std::function<void(const GenerationDiagnostics&)>& on_generation) {
  config.validate();
  if (prior.dim() < 1) throw ValidationError("run_smc: empty prior");
  using Clock = std::chrono::steady_clock;

  SmcResult res;
  auto t0 = Clock::now();
  res.cloud = init_cloud(prior, log_lik, config, seed);
  res.total_likelihood_evals = config.particles;
  double step = config.step_scale;

  auto emit = [&](int gen, double alpha, double ess, double acc, Clock::time_point start) {
    GenerationDiagnostics d;
    d.generation = gen;
    d.alpha = alpha;
    d.ess = ess;
    d.acceptance_rate = acc;
    d.step_scale = step;
    d.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    d.likelihood_evals = res.total_likelihood_evals;
    res.diagnostics.push_back(d);
    if (on_generation) on_generation(d);
  };
  emit(0, 0.0, static_cast<double>(config.particles),
       std::numeric_limits<double>::quiet_NaN(), t0);

  int gen = 0;
  while (res.cloud.alpha < 1.0) {
    if (gen >= config.max_generations) {
      throw GenerationCapError(
          "tempering did not reach temperature 1 within " +
          std::to_string(config.max_generations) + " generations (alpha = " +
          std::to_string(res.cloud.alpha) + " after " + std::to_string(gen) +
          " generations, " + std::to_string(res.total_likelihood_evals) +
          " likelihood evaluations)");
    }
    ++gen;
    auto t_gen = Clock::now();
    const double alpha_next = next_temperature(res.cloud, config);
    reweight(res.cloud, alpha_next);
    const double ess = effective_sample_size(res.cloud.weights);
    RandomStream resample_rng(derive_seed(seed, "resample", static_cast<std::uint64_t>(gen)));
    resample_systematic(res.cloud, resample_rng);
    const MutationStats stats =
        mh_mutate(res.cloud, prior, log_lik, config, step,
                  derive_seed(seed, "mutate", static_cast<std::uint64_t>(gen)));
    res.total_likelihood_evals += stats.proposals;
    res.cloud.generation = gen;
    const double acc = stats.proposals > 0
                           ? static_cast<double>(stats.accepts) /
                                 static_cast<double>(stats.proposals)
                           : 0.0;
    emit(gen, alpha_next, ess, acc, t_gen);
    if (alpha_next < 1.0) {
      // Multiplicative scale adaptation toward the target acceptance rate,
      // frozen once the final temperature is reached.
      step = std::clamp(step * std::exp(acc - config.target_acceptance), 1e-3, 10.0);
    }
  }

  // One extra mutation round at temperature one sharpens the final cloud.
  ++gen;
  auto t_final = Clock::now();
  const MutationStats stats =
      mh_mutate(res.cloud, prior, log_lik, config, step,
                derive_seed(seed, "mutate", static_cast<std::uint64_t>(gen)));
  res.total_likelihood_evals += stats.proposals;
  res.cloud.generation = gen;
  const double acc = stats.proposals > 0
                         ? static_cast<double>(stats.accepts) /
                               static_cast<double>(stats.proposals)
                         : 0.0;
  emit(gen, res.cloud.alpha, effective_sample_size(res.cloud.weights), acc, t_final);

  res.final_step_scale = step;
  return res;
}

}  // namespace

SmcResult run_smc(const RhoPrior& prior, const LogLikelihood& log_lik, const SmcConfig& config,
                  std::uint64_t seed,
                  const std::function<void(const GenerationDiagnostics&)>& on_generation) {
  return run_smc_impl(prior, log_lik, config, seed, on_generation);
}

SmcResult run_smc(const InverseProblem& problem, const RhoPrior& prior, const SmcConfig& config,
                  std::uint64_t seed,
                  const std::function<void(const GenerationDiagnostics&)>& on_generation) {
  if (prior.dim() != problem.rho_dimension()) {
    throw ValidationError("run_smc: prior dimension does not match the correlation case");
  }
  const LogLikelihood log_lik = [&problem](const Eigen::VectorXd& rho) {
    return log_likelihood(problem, problem.make_rho(rho));
  };
  return run_smc_impl(prior, log_lik, config, seed, on_generation);
}

}  // namespace eminv
