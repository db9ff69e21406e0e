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
#include <random>
#include <string_view>

namespace eminv {

/// SplitMix64 finalizer. Bijective on 64-bit words, decorrelates nearby inputs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a hash of a byte string.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives the seed of a named substream from a base seed. Every independent
/// consumer of randomness (truth draw, per-particle chain, per-replicate
/// bootstrap, ...) gets its own stream keyed by (base, label, indices), which
/// is what makes runs reproducible independently of thread count.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(base ^ fnv1a(label));
  h = mix64(h ^ a);
  return mix64(h ^ b);
}

/// A self-contained random stream. Consumption order is part of the contract:
/// two streams with the same seed produce identical draw sequences.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal() { return normal_(engine_); }

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    return s > 0.0 ? x / s : 0.5;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace eminv
