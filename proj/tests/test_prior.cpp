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

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "eminv/errors.hpp"
#include "eminv/prior.hpp"
#include "support.hpp"

using namespace eminv;

namespace {

PriorSpec uniform_spec(const BlockLayout& layout, double reference, double sigma_abs,
                       double sigma_rel, double rho_s) {
  PriorSpec spec;
  spec.reference = Eigen::MatrixXd::Constant(layout.num_blocks(), kNumProperties, reference);
  spec.sigma_abs = sigma_abs;
  spec.sigma_rel = sigma_rel;
  spec.spatial_correlation = rho_s;
  return spec;
}

}  // namespace

TEST_CASE("spatial prior realizes the geometric kernel inside blocks") {
  const BlockLayout layout({3});
  const auto prior = build_spatial_prior(layout, uniform_spec(layout, 2.0, 1.0, 0.0, 0.95));
  // σ ≡ 1: Cov(area_i, area_j) = 0.95^|i−j| within each property.
  const int i13 = layout.state_index(Property::kEpsRe, 0);
  const int i33 = layout.state_index(Property::kEpsRe, 2);
  CHECK(prior.cov.matrix()(i13, i33) == doctest::Approx(0.9025).epsilon(1e-12));
  CHECK(prior.cov.matrix()(i13, i13 + 1) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(prior.cov.matrix()(i13, i13) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prior.mean[i13] == 2.0);
}

TEST_CASE("spatial prior is zero across properties and blocks") {
  const BlockLayout layout({2, 2});
  const auto prior = build_spatial_prior(layout, uniform_spec(layout, 3.0, 0.5, 0.1, 0.8));
  const auto& p = prior.cov.matrix();
  const int eps_re_b0 = layout.state_index(Property::kEpsRe, 0, 0);
  const int eps_re_b1 = layout.state_index(Property::kEpsRe, 1, 0);
  const int eps_im_b0 = layout.state_index(Property::kEpsIm, 0, 0);
  CHECK(p(eps_re_b0, eps_re_b1) == 0.0);  // across blocks
  CHECK(p(eps_re_b0, eps_im_b0) == 0.0);  // across properties
  CHECK(p(eps_re_b0, eps_re_b0 + 1) != 0.0);
}

TEST_CASE("sigma mixes absolute and relative parts") {
  const BlockLayout layout({1});
  PriorSpec spec = uniform_spec(layout, -4.0, 0.1, 0.05, 0.0);
  const auto prior = build_spatial_prior(layout, spec);
  // σ = 0.1 + 0.05·|−4| = 0.3, diagonal prior.
  for (int i = 0; i < layout.state_dim(); ++i) {
    CHECK(prior.cov.matrix()(i, i) == doctest::Approx(0.09).epsilon(1e-12));
  }
}

TEST_CASE("prior validation rejects degenerate specs") {
  const BlockLayout layout({2});
  CHECK_THROWS_AS(build_spatial_prior(layout, uniform_spec(layout, 1.0, 0.0, 0.0, 0.5)),
                  ValidationError);  // σ_abs + σ_rel = 0
  CHECK_THROWS_AS(build_spatial_prior(layout, uniform_spec(layout, 1.0, 0.1, 0.0, 1.2)),
                  ValidationError);  // ρ_S out of [0,1]
  CHECK_THROWS_AS(build_spatial_prior(layout, uniform_spec(layout, 1.0, -0.1, 0.0, 0.5)),
                  ValidationError);
  // ρ_S = 1 makes the block singular: rejected, not regularized.
  CHECK_THROWS_AS(build_spatial_prior(layout, uniform_spec(layout, 1.0, 1.0, 0.0, 1.0)),
                  NotPositiveDefiniteError);
  // σ_rel only with a zero reference gives zero variance for that component.
  PriorSpec zero_ref = uniform_spec(layout, 0.0, 0.0, 0.5, 0.5);
  CHECK_THROWS_AS(build_spatial_prior(layout, zero_ref), NotPositiveDefiniteError);
}

TEST_CASE("prior square root and inverse are consistent") {
  RandomStream rng(31);
  const BlockLayout layout({2, 3});
  const auto priors = eminv::testing::random_priors(layout, 3, rng);
  for (const auto& prior : priors) {
    const auto& h = prior.sqrt.matrix();
    CHECK((h * h.transpose() - prior.cov.matrix()).norm() <= 1e-10 * prior.cov.matrix().norm());
    CHECK((h * prior.sqrt_inv - Eigen::MatrixXd::Identity(h.rows(), h.cols())).norm() < 1e-8);
  }
}

TEST_CASE("expand_rho broadcasts by case") {
  const BlockLayout layout({1, 2});
  const int n = layout.num_areas();

  SUBCASE("case 1: scalar everywhere") {
    Eigen::VectorXd v(1);
    v << 0.7;
    const auto d = expand_rho(CorrelationParam{RhoCase::kScalar, v}, layout);
    CHECK(d.size() == 4 * n);
    CHECK((d.array() == 0.7).all());
  }
  SUBCASE("case 2: per block, repeated per property") {
    Eigen::VectorXd v(2);
    v << 0.2, 0.9;
    const auto d = expand_rho(CorrelationParam{RhoCase::kPerBlock, v}, layout);
    for (int p = 0; p < 4; ++p) {
      CHECK(d[p * n + 0] == 0.2);
      CHECK(d[p * n + 1] == 0.9);
      CHECK(d[p * n + 2] == 0.9);
    }
  }
  SUBCASE("case 3 with equal components collapses to case 1") {
    Eigen::VectorXd v3 = Eigen::VectorXd::Constant(4 * layout.num_blocks(), 0.4);
    Eigen::VectorXd v1(1);
    v1 << 0.4;
    const auto d3 = expand_rho(CorrelationParam{RhoCase::kPerBlockProperty, v3}, layout);
    const auto d1 = expand_rho(CorrelationParam{RhoCase::kScalar, v1}, layout);
    CHECK((d3 - d1).norm() == 0.0);
  }
  SUBCASE("case 3 places (property, block) entries property-major") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(8, 0.1, 0.8);
    const auto d = expand_rho(CorrelationParam{RhoCase::kPerBlockProperty, v}, layout);
    for (int p = 0; p < 4; ++p) {
      CHECK(d[p * n + 0] == doctest::Approx(v[p * 2 + 0]));
      CHECK(d[p * n + 1] == doctest::Approx(v[p * 2 + 1]));
      CHECK(d[p * n + 2] == doctest::Approx(v[p * 2 + 1]));
    }
  }
  SUBCASE("dimension and range validation") {
    Eigen::VectorXd bad_dim(3);
    bad_dim << 0.5, 0.5, 0.5;
    CHECK_THROWS_AS(expand_rho(CorrelationParam{RhoCase::kScalar, bad_dim}, layout),
                    ValidationError);
    Eigen::VectorXd bad_range(1);
    bad_range << 1.5;
    CHECK_THROWS_AS(expand_rho(CorrelationParam{RhoCase::kScalar, bad_range}, layout),
                    ValidationError);
  }
}

TEST_CASE("expand_rho is monotone in its components") {
  RandomStream rng(8);
  const BlockLayout layout({2, 1});
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd lo(2), hi(2);
    for (int i = 0; i < 2; ++i) {
      lo[i] = rng.uniform();
      hi[i] = lo[i] + (1.0 - lo[i]) * rng.uniform();
    }
    const auto dlo = expand_rho(CorrelationParam{RhoCase::kPerBlock, lo}, layout);
    const auto dhi = expand_rho(CorrelationParam{RhoCase::kPerBlock, hi}, layout);
    CHECK((dhi - dlo).minCoeff() >= 0.0);
  }
}

TEST_CASE("commuting property: D shares eigenvectors with block-diagonal H") {
  RandomStream rng(13);
  const BlockLayout layout({2, 3});
  const auto priors = eminv::testing::random_priors(layout, 1, rng);
  const auto& h = priors[0].sqrt.matrix();
  for (RhoCase rho_case :
       {RhoCase::kScalar, RhoCase::kPerBlock, RhoCase::kPerBlockProperty}) {
    const CorrelationParam rho{rho_case,
                               eminv::testing::random_rho_values(rho_case, layout, rng)};
    const Eigen::MatrixXd d = expand_rho(rho, layout).asDiagonal();
    CHECK((d * h - h * d).norm() <= 1e-10 * std::max(1.0, h.norm()));
  }
}

TEST_CASE("transition model preserves the marginals exactly") {
  RandomStream rng(37);
  const BlockLayout layout({1, 2});
  for (int trial = 0; trial < 10; ++trial) {
    const auto priors = eminv::testing::random_priors(layout, 2, rng);
    for (RhoCase rho_case :
         {RhoCase::kScalar, RhoCase::kPerBlock, RhoCase::kPerBlockProperty}) {
      const CorrelationParam rho{rho_case,
                                 eminv::testing::random_rho_values(rho_case, layout, rng)};
      const auto t = transition_model(rho, layout, priors[0], priors[1]);
      const Eigen::MatrixXd recon = t.m * priors[0].cov.matrix() * t.m.transpose() + t.q;
      CHECK((recon - priors[1].cov.matrix()).norm() <=
            1e-8 * priors[1].cov.matrix().norm());
      const Eigen::VectorXd mean_recon = t.m * priors[0].mean + t.b;
      CHECK((mean_recon - priors[1].mean).norm() <= 1e-10 * priors[1].mean.norm());
    }
  }
}

TEST_CASE("transition model limit cases") {
  RandomStream rng(41);
  const BlockLayout layout({2});
  const auto priors = eminv::testing::random_priors(layout, 2, rng);
  const int dim = layout.state_dim();

  SUBCASE("rho = 0: frequencies decouple") {
    Eigen::VectorXd zero(1);
    zero << 0.0;
    const auto t = transition_model(CorrelationParam{RhoCase::kScalar, zero}, layout,
                                    priors[0], priors[1]);
    CHECK(t.m.norm() == 0.0);
    CHECK((t.q - priors[1].cov.matrix()).norm() <= 1e-12 * priors[1].cov.matrix().norm());
    CHECK((t.b - priors[1].mean).norm() == 0.0);
  }
  SUBCASE("rho = 1 with constant prior: frozen profile") {
    Eigen::VectorXd one(1);
    one << 1.0;
    const auto t = transition_model(CorrelationParam{RhoCase::kScalar, one}, layout,
                                    priors[0], priors[0]);
    CHECK((t.m - Eigen::MatrixXd::Identity(dim, dim)).norm() < 1e-9);
    CHECK(t.q.norm() <= 1e-10 * priors[0].cov.matrix().norm());
    CHECK(t.b.norm() < 1e-9);
  }
}

TEST_CASE("prior trajectories: determinism and limit cases") {
  RandomStream rng(43);
  const BlockLayout layout({2});
  const auto priors = eminv::testing::random_priors(layout, 4, rng);

  SUBCASE("equal seeds give bitwise-equal trajectories") {
    Eigen::VectorXd v(1);
    v << 0.6;
    const CorrelationParam rho{RhoCase::kScalar, v};
    RandomStream a(5), b(5);
    const auto ta = sample_prior_trajectory(rho, layout, priors, a);
    const auto tb = sample_prior_trajectory(rho, layout, priors, b);
    for (std::size_t k = 0; k < ta.size(); ++k) CHECK(ta[k] == tb[k]);
  }
  SUBCASE("rho = 1 with constant priors freezes the trajectory") {
    Eigen::VectorXd v(1);
    v << 1.0;
    const std::vector<MarginalPrior> constant(4, priors[0]);
    RandomStream stream(6);
    const auto t = sample_prior_trajectory(CorrelationParam{RhoCase::kScalar, v}, layout,
                                           constant, stream);
    for (std::size_t k = 1; k < t.size(); ++k) CHECK((t[k] - t[0]).norm() < 1e-12);
  }
}

TEST_CASE("prior trajectories have the prescribed joint moments") {
  RandomStream rng(47);
  const BlockLayout layout({2});
  const int dim = layout.state_dim();
  const int num_freq = 3;
  const auto priors = eminv::testing::random_priors(layout, num_freq, rng);
  Eigen::VectorXd v(1);
  v << 0.7;
  const CorrelationParam rho{RhoCase::kScalar, v};
  const Eigen::VectorXd d = expand_rho(rho, layout);

  const int n = 100000;
  RandomStream stream(48);
  std::vector<Eigen::VectorXd> sum(num_freq, Eigen::VectorXd::Zero(dim));
  Eigen::MatrixXd cross01 = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd cross02 = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    const auto t = sample_prior_trajectory(rho, layout, priors, stream);
    for (int k = 0; k < num_freq; ++k) sum[static_cast<std::size_t>(k)] += t[k];
    cross01 += (t[0] - priors[0].mean) * (t[1] - priors[1].mean).transpose();
    cross02 += (t[0] - priors[0].mean) * (t[2] - priors[2].mean).transpose();
  }
  // Cov(X_i, X_j) = H_i D^{|i−j|} H_j.
  auto check_cross = [&](const Eigen::MatrixXd& emp_sum, int lag) {
    Eigen::VectorXd dpow = Eigen::VectorXd::Ones(dim);
    for (int p = 0; p < lag; ++p) dpow.array() *= d.array();
    const Eigen::MatrixXd expected = priors[0].sqrt.matrix() * dpow.asDiagonal() *
                                     priors[static_cast<std::size_t>(lag)].sqrt.matrix();
    const Eigen::MatrixXd emp = emp_sum / n;
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        const double se = std::sqrt(
            (priors[0].cov.matrix()(i, i) *
                 priors[static_cast<std::size_t>(lag)].cov.matrix()(j, j) +
             expected(i, j) * expected(i, j)) /
            n);
        CHECK(std::abs(emp(i, j) - expected(i, j)) < 4.0 * se);
      }
    }
  };
  check_cross(cross01, 1);
  check_cross(cross02, 2);
  for (int k = 0; k < num_freq; ++k) {
    const Eigen::VectorXd emp_mean = sum[static_cast<std::size_t>(k)] / n;
    for (int i = 0; i < dim; ++i) {
      const double se =
          std::sqrt(priors[static_cast<std::size_t>(k)].cov.matrix()(i, i) / n);
      CHECK(std::abs(emp_mean[i] - priors[static_cast<std::size_t>(k)].mean[i]) < 4.0 * se);
    }
  }
}
