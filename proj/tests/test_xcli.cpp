// Copyright 2026 The prulab developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>
#include <json.hpp>

#include "experiments.hpp"

using namespace prulab;

TEST_CASE("config parsing") {
  ExperimentConfig cfg = ExperimentConfig::from_string(
      "# comment\n"
      "n = 2\n"
      "seed = 12345\n"
      "format = csv\n");
  CHECK(cfg.get_int("n") == 2);
  CHECK(cfg.get_u64("seed") == 12345);
  CHECK(cfg.get_string("format") == "csv");
  // Untouched keys keep defaults.
  CHECK(cfg.get_int("mc_samples") == 4096);

  CHECK_THROWS_AS(ExperimentConfig::from_string("nope = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_string("n 2\n"), std::invalid_argument);
  ExperimentConfig bad = ExperimentConfig::from_string("n = zebra\n");
  CHECK_THROWS_AS(bad.get_int("n"), std::invalid_argument);

  // Defaults print as parsable key = value lines.
  ExperimentConfig round = ExperimentConfig::from_string(
      ExperimentConfig::print_defaults());
  CHECK(round.entries() == ExperimentConfig().entries());
}

TEST_CASE("report serialization") {
  ExperimentReport rep;
  rep.config = ExperimentConfig();
  CheckResult a;
  a.suite = "twirls";
  a.name = "alpha";
  a.measured = 1e-12;
  a.tolerance = 1e-10;
  a.pass = true;
  CheckResult b;
  b.suite = "gluing";
  b.name = "beta";
  b.measured = 0.5;
  b.bound = 0.4;
  b.tolerance = 1e-9;
  b.pass = false;
  rep.checks = {a, b};
  CHECK_FALSE(rep.passed());

  // JSON round trip.
  ExperimentReport back = ExperimentReport::from_json(rep.to_json());
  REQUIRE(back.checks.size() == 2);
  CHECK(back.checks[0].name == "alpha");
  CHECK(back.checks[1].measured == 0.5);
  CHECK(back.schema == 1);

  // CSV has the stable column order and one row per check.
  std::string csv = rep.to_csv();
  CHECK(csv.rfind("suite,name,measured,bound,tolerance,se,vacuous,pass\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  CHECK_THROWS_AS(ExperimentReport::from_json("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentReport::from_json("{\"schema\": 2, \"config\": {}, \"checks\": []}"),
                  std::invalid_argument);
}

TEST_CASE("report merging") {
  ExperimentReport r1, r2;
  CheckResult a;
  a.suite = "twirls";
  a.name = "zeta";
  a.pass = true;
  CheckResult b;
  b.suite = "identities";
  b.name = "alpha";
  b.pass = true;
  r1.checks = {a};
  r2.checks = {b};
  ExperimentReport merged = merge_reports({r1, r2});
  REQUIRE(merged.checks.size() == 2);
  // Sorted by (suite, name).
  CHECK(merged.checks[0].suite == "identities");
  CHECK(merged.checks[1].suite == "twirls");

  // Single report in, identical rows out.
  ExperimentReport single = merge_reports({r1});
  CHECK(single.checks.size() == 1);
  CHECK(single.checks[0].name == "zeta");

  // Merged pass rate equals the mean of the per-report flags.
  int pass_count = 0;
  for (const CheckResult& c : merged.checks) pass_count += c.pass ? 1 : 0;
  CHECK(pass_count == 2);
}

TEST_CASE("distinguish v against itself") {
  ExperimentConfig cfg;
  cfg.set("distinguish_left", "v");
  cfg.set("distinguish_right", "v");
  ExperimentReport rep = run_distinguish(cfg);
  REQUIRE(rep.checks.size() == 1);
  CHECK(rep.checks[0].measured < 1e-12);
  CHECK(rep.checks[0].pass);

  cfg.set("distinguish_right", "nonsense");
  CHECK_THROWS_AS(run_distinguish(cfg), std::invalid_argument);
}

TEST_CASE("distinguish pfo against v at N = 4") {
  ExperimentConfig cfg;
  cfg.set("distinguish_left", "pfo");
  cfg.set("distinguish_right", "v");
  ExperimentReport rep = run_distinguish(cfg);
  REQUIRE(rep.checks.size() == 1);
  // Bound 2t(t-1)/(N+1) = 0.8 at N=4, t=2.
  CHECK(rep.checks[0].bound == doctest::Approx(0.8));
  CHECK(rep.checks[0].pass);
}

TEST_CASE("verify rejects unknown suites") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(run_verify("bogus", cfg), std::invalid_argument);
}

TEST_CASE("suite registry covers the spec surface") {
  std::vector<std::string> suites = suite_names();
  for (const char* expected :
       {"identities", "isometries", "twirls", "invariance", "strong",
        "restricted", "gluing", "all"}) {
    CHECK(std::find(suites.begin(), suites.end(), expected) != suites.end());
  }
  // Every registered check belongs to a known suite.
  for (const CheckDef& def : check_registry())
    CHECK(std::find(suites.begin(), suites.end(), def.suite) != suites.end());
}

TEST_CASE("restricted suite is deterministic end to end") {
  ExperimentConfig cfg;
  cfg.set("mc_samples", "256");
  ExperimentReport r1 = run_verify("restricted", cfg);
  ExperimentReport r2 = run_verify("restricted", cfg);
  REQUIRE(r1.checks.size() == r2.checks.size());
  for (size_t i = 0; i < r1.checks.size(); ++i) {
    CHECK(r1.checks[i].name == r2.checks[i].name);
    CHECK(r1.checks[i].measured == r2.checks[i].measured);  // bit-identical
    CHECK(r1.checks[i].se == r2.checks[i].se);
  }
  for (const CheckResult& c : r1.checks) {
    INFO(c.name << " measured=" << c.measured);
    CHECK(c.pass);
  }
}
