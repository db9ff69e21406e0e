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

#include <string>

#include "eminv/errors.hpp"
#include "eminv/layout.hpp"
#include "eminv/prior.hpp"

using namespace eminv;

TEST_CASE("layout shape accounting") {
  const BlockLayout layout({1, 2});
  CHECK(layout.num_blocks() == 2);
  CHECK(layout.num_areas() == 3);
  CHECK(layout.state_dim() == 12);

  CHECK_THROWS_AS(BlockLayout(std::vector<int>{}), ValidationError);
  CHECK_THROWS_AS(BlockLayout({2, 0}), ValidationError);
  CHECK_THROWS_AS(BlockLayout({-1}), ValidationError);
}

TEST_CASE("state indexing is property-major, then area") {
  const BlockLayout layout({1, 2});
  const int n = layout.num_areas();
  // Global-area overload.
  for (int p = 0; p < kNumProperties; ++p) {
    for (int area = 0; area < n; ++area) {
      CHECK(layout.state_index(static_cast<Property>(p), area) == p * n + area);
    }
  }
  // (block, area-in-block) overload agrees with the global numbering.
  CHECK(layout.state_index(Property::kEpsIm, 0, 0) == 1 * n + 0);
  CHECK(layout.state_index(Property::kEpsIm, 1, 0) == 1 * n + 1);
  CHECK(layout.state_index(Property::kEpsIm, 1, 1) == 1 * n + 2);
  CHECK(layout.state_index(Property::kMuIm, 1, 1) == 3 * n + 2);
}

TEST_CASE("block_of_area maps global areas to their block") {
  const BlockLayout layout({2, 1, 3});
  CHECK(layout.block_of_area(0) == 0);
  CHECK(layout.block_of_area(1) == 0);
  CHECK(layout.block_of_area(2) == 1);
  CHECK(layout.block_of_area(3) == 2);
  CHECK(layout.block_of_area(5) == 2);
}

TEST_CASE("component names are stable and descriptive") {
  const BlockLayout layout({1, 2});
  CHECK(layout.component_name(0) == "eps_re.b0.a0");
  CHECK(layout.component_name(1) == "eps_re.b1.a0");
  CHECK(layout.component_name(2) == "eps_re.b1.a1");
  CHECK(layout.component_name(3) == "eps_im.b0.a0");
  CHECK(layout.component_name(11) == "mu_im.b1.a1");
  CHECK(std::string(property_name(Property::kMuRe)) == "mu_re");
}

TEST_CASE("rho dimensionality per correlation case") {
  const BlockLayout layout({1, 2, 1});
  CHECK(rho_dim(RhoCase::kScalar, layout) == 1);
  CHECK(rho_dim(RhoCase::kPerBlock, layout) == 3);
  CHECK(rho_dim(RhoCase::kPerBlockProperty, layout) == 12);

  CHECK(rho_case_from_int(1) == RhoCase::kScalar);
  CHECK(rho_case_from_int(2) == RhoCase::kPerBlock);
  CHECK(rho_case_from_int(3) == RhoCase::kPerBlockProperty);
  CHECK_THROWS_AS(rho_case_from_int(0), ValidationError);
  CHECK_THROWS_AS(rho_case_from_int(4), ValidationError);
}

TEST_CASE("rho component names per case") {
  const BlockLayout layout({1, 2});
  CHECK(rho_component_name(RhoCase::kScalar, layout, 0) == "rho");
  CHECK(rho_component_name(RhoCase::kPerBlock, layout, 1) == "rho.b1");
  // Case 3 indexing is property-major: index = property · N_b + block.
  CHECK(rho_component_name(RhoCase::kPerBlockProperty, layout, 0) == "rho.eps_re.b0");
  CHECK(rho_component_name(RhoCase::kPerBlockProperty, layout, 3) == "rho.eps_im.b1");
  CHECK(rho_component_name(RhoCase::kPerBlockProperty, layout, 5) == "rho.mu_re.b1");
  CHECK(rho_component_name(RhoCase::kPerBlockProperty, layout, 7) == "rho.mu_im.b1");
}
