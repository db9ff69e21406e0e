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

#include "eminv/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eminv/errors.hpp"

namespace eminv {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string ArtifactHeader::line() const {
  std::string out = "# eminv " + version + " scenario=" + hex64(scenario_hash) + " seed=";
  out += std::to_string(seed);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;  // %.17g always round-trips finite doubles
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ValidationError("cannot parse '" + text + "' as a number");
  }
  return v;
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  throw ValidationError("table has no column named '" + name + "'");
}

double Table::value(std::size_t row, int col) const {
  if (row >= rows.size() || col < 0 || static_cast<std::size_t>(col) >= rows[row].size()) {
    throw ValidationError("table cell out of range");
  }
  return parse_double(rows[row][static_cast<std::size_t>(col)]);
}

double Table::value(std::size_t row, const std::string& name) const {
  return value(row, column(name));
}

void write_table(const std::filesystem::path& path, const ArtifactHeader& header,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << header.line() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw ValidationError("row width does not match the column count in " + path.string());
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\n";
  }
  if (!out) throw ValidationError("failed to write " + path.string());
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  Table table;
  std::string line;
  bool have_columns = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      // Recover provenance from "# eminv <version> scenario=<hex> seed=<dec>".
      std::istringstream ss(line.substr(1));
      std::string tool, version, scenario, seed;
      if (ss >> tool >> version >> scenario >> seed && tool == "eminv" &&
          scenario.rfind("scenario=", 0) == 0 && seed.rfind("seed=", 0) == 0) {
        ArtifactHeader h;
        h.version = version;
        h.scenario_hash = std::strtoull(scenario.c_str() + 9, nullptr, 16);
        h.seed = std::strtoull(seed.c_str() + 5, nullptr, 10);
        table.header = h;
      }
      continue;
    }
    if (!have_columns) {
      table.columns = split_csv(line);
      have_columns = true;
      continue;
    }
    auto cells = split_csv(line);
    if (cells.size() != table.columns.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(table.columns.size()) +
                            " cells, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_columns) throw ValidationError(path.string() + ": no column header found");
  return table;
}

}  // namespace eminv
