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

#include <string>
#include <vector>

namespace eminv {

/// The four material parameters estimated per area: real and imaginary parts
/// of relative permittivity and permeability.
enum class Property : int { kEpsRe = 0, kEpsIm = 1, kMuRe = 2, kMuIm = 3 };

inline constexpr int kNumProperties = 4;

const char* property_name(Property p);
Property property_from_name(const std::string& name);

/// Maps (property, block, area-within-block) to positions in the flattened
/// state vector. Areas are grouped into contiguous blocks (one per physical
/// material); the state stacks property-major:
///   [eps_re(all areas), eps_im(all areas), mu_re(all areas), mu_im(all areas)].
class BlockLayout {
 public:
  /// areas_per_block[b] > 0 for every block; at least one block.
  explicit BlockLayout(std::vector<int> areas_per_block);

  int num_blocks() const { return static_cast<int>(areas_per_block_.size()); }
  int num_areas() const { return num_areas_; }
  int state_dim() const { return kNumProperties * num_areas_; }
  int areas_in_block(int block) const;
  /// First area index of the block, in the global 0..num_areas()−1 numbering.
  int block_offset(int block) const;
  /// Block containing the given global area index.
  int block_of_area(int area) const;

  /// Position of (property, block, area-within-block) in the state vector.
  int state_index(Property p, int block, int area_in_block) const;
  /// Position of (property, global area).
  int state_index(Property p, int area) const;

  /// "eps_re.b0.a2"-style name for a state component, stable across runs.
  std::string component_name(int state_index) const;

  const std::vector<int>& areas_per_block() const { return areas_per_block_; }
  bool operator==(const BlockLayout& other) const = default;

 private:
  std::vector<int> areas_per_block_;
  std::vector<int> offsets_;
  int num_areas_ = 0;
};

}  // namespace eminv
