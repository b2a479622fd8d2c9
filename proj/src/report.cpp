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

#include "report.hpp"

#include <json.hpp>
#include <algorithm>
#include <cstdio>
#include <sstream>

namespace prulab {

const char* kLibraryVersion = "0.1.0";

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json check_to_json(const CheckResult& c) {
  nlohmann::json j;
  j["suite"] = c.suite;
  j["name"] = c.name;
  j["measured"] = c.measured;
  j["bound"] = c.bound;
  j["tolerance"] = c.tolerance;
  j["se"] = c.se;
  j["vacuous"] = c.vacuous;
  j["pass"] = c.pass;
  j["runtime_ms"] = c.runtime_ms;
  return j;
}

CheckResult check_from_json(const nlohmann::json& j) {
  CheckResult c;
  c.suite = j.at("suite").get<std::string>();
  c.name = j.at("name").get<std::string>();
  c.measured = j.at("measured").get<double>();
  c.bound = j.at("bound").get<double>();
  c.tolerance = j.at("tolerance").get<double>();
  c.se = j.value("se", 0.0);
  c.vacuous = j.value("vacuous", false);
  c.pass = j.at("pass").get<bool>();
  c.runtime_ms = j.value("runtime_ms", 0.0);
  return c;
}

}  // namespace

bool ExperimentReport::passed() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string ExperimentReport::to_json() const {
  nlohmann::json j;
  j["schema"] = schema;
  j["version"] = version.empty() ? kLibraryVersion : version;
  nlohmann::json cfg;
  for (const auto& [k, v] : config.entries()) cfg[k] = v;
  j["config"] = std::move(cfg);
  nlohmann::json arr = nlohmann::json::array();
  for (const CheckResult& c : checks) arr.push_back(check_to_json(c));
  j["checks"] = std::move(arr);
  j["wall_clock_ms"] = wall_clock_ms;
  j["passed"] = passed();
  return j.dump(2);
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "suite,name,measured,bound,tolerance,se,vacuous,pass\n";
  for (const CheckResult& c : checks) {
    os << c.suite << ',' << c.name << ',' << fmt_double(c.measured) << ','
       << fmt_double(c.bound) << ',' << fmt_double(c.tolerance) << ','
       << fmt_double(c.se) << ',' << (c.vacuous ? 1 : 0) << ','
       << (c.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

ExperimentReport ExperimentReport::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("report: malformed JSON: ") + e.what());
  }
  ExperimentReport rep;
  rep.schema = j.at("schema").get<int>();
  if (rep.schema != 1)
    throw std::invalid_argument("report: unsupported schema version");
  rep.version = j.value("version", "");
  for (auto it = j.at("config").begin(); it != j.at("config").end(); ++it)
    rep.config.set(it.key(), it.value().get<std::string>());
  for (const auto& c : j.at("checks")) rep.checks.push_back(check_from_json(c));
  rep.wall_clock_ms = j.value("wall_clock_ms", 0.0);
  return rep;
}

ExperimentReport merge_reports(const std::vector<ExperimentReport>& reports) {
  ExperimentReport out;
  if (!reports.empty()) out.config = reports.front().config;
  for (const ExperimentReport& r : reports)
    out.checks.insert(out.checks.end(), r.checks.begin(), r.checks.end());
  std::stable_sort(out.checks.begin(), out.checks.end(),
                   [](const CheckResult& a, const CheckResult& b) {
                     if (a.suite != b.suite) return a.suite < b.suite;
                     return a.name < b.name;
                   });
  return out;
}

}  // namespace prulab
