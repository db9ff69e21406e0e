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

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "eminv/errors.hpp"
#include "eminv/io.hpp"
#include "eminv/random.hpp"
#include "support.hpp"

using namespace eminv;
using eminv::testing::TempDir;

TEST_CASE("format_double round-trips exactly") {
  RandomStream rng(61);
  std::vector<double> values = {0.0,
                                -0.0,
                                1.0,
                                0.1,
                                -0.1,
                                M_PI,
                                2.0 / 3.0,
                                1e-300,
                                -1e300,
                                std::numeric_limits<double>::denorm_min(),
                                std::numeric_limits<double>::max(),
                                std::numeric_limits<double>::epsilon()};
  for (int i = 0; i < 500; ++i) {
    values.push_back(std::exp(40.0 * (rng.uniform() - 0.5)) * rng.normal());
  }
  for (double v : values) {
    const std::string text = format_double(v);
    const double back = parse_double(text);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  // Shortest form: integers print without exponent noise.
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.0) == "-2");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("parse_double rejects junk and partial parses") {
  CHECK(parse_double("3.25") == 3.25);
  CHECK(parse_double("-1e-5") == -1e-5);
  CHECK_THROWS_AS(parse_double(""), ValidationError);
  CHECK_THROWS_AS(parse_double("abc"), ValidationError);
  CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
  CHECK_THROWS_AS(parse_double("1.5 2.5"), ValidationError);
}

TEST_CASE("artifact header formats the provenance line") {
  ArtifactHeader header;
  header.version = "0.1.0";
  header.scenario_hash = 0xdeadbeefcafef00dULL;
  header.seed = 42;
  const std::string line = header.line();
  CHECK(line.rfind("# eminv 0.1.0", 0) == 0);
  CHECK(line.find("scenario=deadbeefcafef00d") != std::string::npos);
  CHECK(line.find("seed=42") != std::string::npos);
}

TEST_CASE("write_table / read_table round-trip") {
  TempDir dir;
  ArtifactHeader header;
  header.version = "0.1.0";
  header.scenario_hash = 0x123456789abcdef0ULL;
  header.seed = 7;
  const std::vector<std::string> columns = {"frequency", "name", "value"};
  const std::vector<std::vector<std::string>> rows = {
      {"0", "eps_re.b0.a0", format_double(4.25)},
      {"1", "eps_re.b0.a0", format_double(-0.125)},
      {"2", "mu_im.b1.a1", format_double(1e-17)},
  };
  const auto path = dir.path() / "artifact.csv";
  write_table(path, header, columns, rows);

  const Table table = read_table(path);
  REQUIRE(table.header.has_value());
  CHECK(table.header->version == "0.1.0");
  CHECK(table.header->scenario_hash == 0x123456789abcdef0ULL);
  CHECK(table.header->seed == 7);
  REQUIRE(table.columns == columns);
  REQUIRE(table.rows == rows);
  CHECK(table.column("value") == 2);
  CHECK(table.value(0, "value") == 4.25);
  CHECK(table.value(2, 2) == 1e-17);
  CHECK(table.value(1, "frequency") == 1.0);
  CHECK_THROWS_AS(table.column("nope"), ValidationError);
}

TEST_CASE("read_table diagnoses malformed files") {
  TempDir dir;
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_table(dir.path() / "absent.csv"), ValidationError);
  }
  SUBCASE("ragged row names the line") {
    const auto path = dir.path() / "ragged.csv";
    eminv::testing::write_text(path, "a,b\n1,2\n3\n");
    CHECK_THROWS_WITH_AS(read_table(path), doctest::Contains(":3:"), ValidationError);
  }
  SUBCASE("empty file has no columns") {
    const auto path = dir.path() / "empty.csv";
    eminv::testing::write_text(path, "");
    CHECK_THROWS_AS(read_table(path), ValidationError);
  }
  SUBCASE("header comment is optional") {
    const auto path = dir.path() / "plain.csv";
    eminv::testing::write_text(path, "x,y\n1,2\n");
    const Table table = read_table(path);
    CHECK_FALSE(table.header.has_value());
    CHECK(table.columns.size() == 2);
    CHECK(table.value(0, "y") == 2.0);
  }
}

TEST_CASE("write_table rejects rows of the wrong width") {
  TempDir dir;
  ArtifactHeader header;
  header.version = "0.1.0";
  CHECK_THROWS_AS(write_table(dir.path() / "bad.csv", header, {"a"}, {{"1", "2"}}),
                  ValidationError);
}

TEST_CASE("value() reports the offending cell") {
  TempDir dir;
  const auto path = dir.path() / "text.csv";
  eminv::testing::write_text(path, "k,label\n0,hello\n");
  const Table table = read_table(path);
  CHECK_THROWS_AS(table.value(0, "label"), ValidationError);
  CHECK_THROWS_AS(table.value(5, 0), ValidationError);
}
