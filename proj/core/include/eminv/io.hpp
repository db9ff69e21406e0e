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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace eminv {

/// Provenance stamped as a comment line on every artifact:
/// `# eminv <version> scenario=<hex hash> seed=<seed>`.
struct ArtifactHeader {
  std::string version;
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;

  std::string line() const;
};

/// Shortest decimal form of v that parses back to exactly the same double.
std::string format_double(double v);

/// strtod with a full-consumption check; throws ValidationError on junk.
double parse_double(const std::string& text);

/// A CSV table in memory. Cells are kept as text; numeric access parses on
/// demand so integer and float columns coexist.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::optional<ArtifactHeader> header;

  int column(const std::string& name) const;           // throws if absent
  double value(std::size_t row, int col) const;
  double value(std::size_t row, const std::string& name) const;
};

/// Writes a comma-separated table with the provenance comment first. Cells
/// must already be formatted; they may not contain commas or newlines.
void write_table(const std::filesystem::path& path, const ArtifactHeader& header,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<std::string>>& rows);

/// Reads a table written by write_table (or any #-commented CSV).
Table read_table(const std::filesystem::path& path);

}  // namespace eminv
