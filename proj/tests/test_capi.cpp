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

#include <cstring>
#include <string>

#include "prulab/prulab.h"

TEST_CASE("version and defaults") {
  CHECK(std::strlen(prulab_version()) > 0);
  char* text = nullptr;
  REQUIRE(prulab_config_defaults(&text) == PRULAB_OK);
  CHECK(std::string(text).find("mc_samples") != std::string::npos);
  prulab_string_free(text);
}

TEST_CASE("config lifecycle and errors") {
  prulab_config* cfg = nullptr;
  REQUIRE(prulab_config_create(&cfg) == PRULAB_OK);
  CHECK(prulab_config_set(cfg, "seed", "7") == PRULAB_OK);
  CHECK(prulab_config_set(cfg, "definitely-not-a-key", "1") == PRULAB_ERR_INVALID);
  CHECK(std::strlen(prulab_last_error()) > 0);
  CHECK(prulab_config_load_file(cfg, "/no/such/file") == PRULAB_ERR_INVALID);
  prulab_config_free(cfg);

  CHECK(prulab_config_create(nullptr) == PRULAB_ERR_INVALID);
}

TEST_CASE("distinguish through the C surface") {
  prulab_config* cfg = nullptr;
  REQUIRE(prulab_config_create(&cfg) == PRULAB_OK);
  REQUIRE(prulab_config_set(cfg, "distinguish_left", "v") == PRULAB_OK);
  REQUIRE(prulab_config_set(cfg, "distinguish_right", "v") == PRULAB_OK);

  prulab_report* rep = nullptr;
  REQUIRE(prulab_distinguish(cfg, &rep) == PRULAB_OK);
  CHECK(prulab_report_passed(rep) == 1);
  REQUIRE(prulab_report_check_count(rep) == 1);

  char* line = nullptr;
  REQUIRE(prulab_report_check_line(rep, 0, &line) == PRULAB_OK);
  CHECK(std::string(line).rfind("PASS", 0) == 0);
  prulab_string_free(line);

  char* json = nullptr;
  REQUIRE(prulab_report_json(rep, &json) == PRULAB_OK);

  // Round trip through parse + merge.
  prulab_report* parsed = nullptr;
  REQUIRE(prulab_report_parse_json(json, &parsed) == PRULAB_OK);
  const prulab_report* both[2] = {rep, parsed};
  prulab_report* merged = nullptr;
  REQUIRE(prulab_report_merge(both, 2, &merged) == PRULAB_OK);
  CHECK(prulab_report_check_count(merged) == 2);

  char* csv = nullptr;
  REQUIRE(prulab_report_csv(merged, &csv) == PRULAB_OK);
  CHECK(std::string(csv).rfind("suite,name,", 0) == 0);

  prulab_string_free(csv);
  prulab_string_free(json);
  prulab_report_free(merged);
  prulab_report_free(parsed);
  prulab_report_free(rep);
  prulab_config_free(cfg);
}

TEST_CASE("unknown suite maps to an invalid-argument status") {
  prulab_config* cfg = nullptr;
  REQUIRE(prulab_config_create(&cfg) == PRULAB_OK);
  prulab_report* rep = nullptr;
  CHECK(prulab_verify(cfg, "bogus", &rep) == PRULAB_ERR_INVALID);
  prulab_config_free(cfg);
}

TEST_CASE("malformed report JSON is rejected") {
  prulab_report* rep = nullptr;
  CHECK(prulab_report_parse_json("{oops", &rep) == PRULAB_ERR_INVALID);
}
