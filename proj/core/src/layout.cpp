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

#include "eminv/layout.hpp"

#include <array>

#include "eminv/errors.hpp"

namespace eminv {

namespace {
constexpr std::array<const char*, kNumProperties> kPropertyNames = {
    "eps_re", "eps_im", "mu_re", "mu_im"};
}  // namespace

const char* property_name(Property p) {
  const int i = static_cast<int>(p);
  if (i < 0 || i >= kNumProperties) throw ValidationError("property_name: bad property");
  return kPropertyNames[static_cast<std::size_t>(i)];
}

Property property_from_name(const std::string& name) {
  for (int i = 0; i < kNumProperties; ++i) {
    if (name == kPropertyNames[static_cast<std::size_t>(i)]) return static_cast<Property>(i);
  }
  throw ValidationError("unknown property name '" + name +
                        "' (expected eps_re, eps_im, mu_re or mu_im)");
}

BlockLayout::BlockLayout(std::vector<int> areas_per_block)
    : areas_per_block_(std::move(areas_per_block)) {
  if (areas_per_block_.empty()) {
    throw ValidationError("BlockLayout: need at least one block");
  }
  offsets_.reserve(areas_per_block_.size());
  for (int n : areas_per_block_) {
    if (n <= 0) throw ValidationError("BlockLayout: every block needs at least one area");
    offsets_.push_back(num_areas_);
    num_areas_ += n;
  }
}

int BlockLayout::areas_in_block(int block) const {
  if (block < 0 || block >= num_blocks()) throw ValidationError("BlockLayout: block out of range");
  return areas_per_block_[static_cast<std::size_t>(block)];
}

int BlockLayout::block_offset(int block) const {
  if (block < 0 || block >= num_blocks()) throw ValidationError("BlockLayout: block out of range");
  return offsets_[static_cast<std::size_t>(block)];
}

int BlockLayout::block_of_area(int area) const {
  if (area < 0 || area >= num_areas_) throw ValidationError("BlockLayout: area out of range");
  int b = num_blocks() - 1;
  while (offsets_[static_cast<std::size_t>(b)] > area) --b;
  return b;
}

int BlockLayout::state_index(Property p, int block, int area_in_block) const {
  if (area_in_block < 0 || area_in_block >= areas_in_block(block)) {
    throw ValidationError("BlockLayout: area index out of range for block");
  }
  return state_index(p, block_offset(block) + area_in_block);
}

int BlockLayout::state_index(Property p, int area) const {
  const int pi = static_cast<int>(p);
  if (pi < 0 || pi >= kNumProperties) throw ValidationError("BlockLayout: bad property");
  if (area < 0 || area >= num_areas_) throw ValidationError("BlockLayout: area out of range");
  return pi * num_areas_ + area;
}

std::string BlockLayout::component_name(int state_index) const {
  if (state_index < 0 || state_index >= state_dim()) {
    throw ValidationError("BlockLayout: state index out of range");
  }
  const int p = state_index / num_areas_;
  const int area = state_index % num_areas_;
  const int block = block_of_area(area);
  const int local = area - block_offset(block);
  return std::string(kPropertyNames[static_cast<std::size_t>(p)]) + ".b" +
         std::to_string(block) + ".a" + std::to_string(local);
}

}  // namespace eminv
