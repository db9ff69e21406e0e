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

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "eminv/gaussian.hpp"
#include "eminv/random.hpp"

namespace {

Eigen::MatrixXd random_spd(int dim, eminv::RandomStream& rng) {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = rng.normal();
  }
  return eminv::symmetrize(m * m.transpose()) +
         0.5 * dim * Eigen::MatrixXd::Identity(dim, dim);
}

void BM_SpdSqrt(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  eminv::RandomStream rng(7);
  const eminv::SpdMatrix cov(random_spd(dim, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(eminv::spd_sqrt(cov));
  }
  state.SetComplexityN(dim);
}

void BM_LogMvnDensity(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  eminv::RandomStream rng(11);
  const eminv::GaussianDist dist(rng.normal_vector(dim),
                                 eminv::SpdMatrix(random_spd(dim, rng)));
  const Eigen::VectorXd x = rng.normal_vector(dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eminv::log_mvn_density(x, dist));
  }
}

}  // namespace

BENCHMARK(BM_SpdSqrt)->Arg(8)->Arg(20)->Arg(76)->Complexity(benchmark::oNCubed);
BENCHMARK(BM_LogMvnDensity)->Arg(8)->Arg(20)->Arg(76);

BENCHMARK_MAIN();
