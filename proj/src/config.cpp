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

#include "config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace prulab {

namespace {

const std::vector<std::pair<const char*, const char*>>& default_table() {
  static const std::vector<std::pair<const char*, const char*>> table = {
      {"experiment", "all"},       // suite name for `verify`
      {"n", "2"},                  // query-register qubits (N = 2^n)
      {"m", "1"},                  // ancilla qubits
      {"t", "2"},                  // oracle queries
      {"seed", "20260810"},        // master seed
      {"mc_samples", "4096"},      // Monte-Carlo sample count K
      {"pair_coverage", "64"},     // seeded (C,D) blocks for n=2 strong checks
      {"invariance_pairs", "20"},  // seeded (C,D) pairs for norm scans
      {"jobs", "1"},               // parallel checks
      {"tol_exact", "1e-10"},      // exact-identity tolerance
      {"tol_entry", "1e-12"},      // entrywise sparse-algebra tolerance
      {"out", ""},                 // report output path ("" = stdout)
      {"format", "json"},          // json | csv
      {"distinguish_left", "v"},   // cmd_distinguish pair
      {"distinguish_right", "pf-clifford"},
  };
  return table;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& [k, v] : default_table()) values_[k] = v;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!values_.count(key))
    throw std::invalid_argument("config: unknown key '" + key + "'");
  values_[key] = value;
}

bool ExperimentConfig::has(const std::string& key) const { return values_.count(key); }

const std::string& ExperimentConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("config: unknown key '" + key + "'");
  return it->second;
}

long ExperimentConfig::get_int(const std::string& key) const {
  try {
    size_t pos = 0;
    long v = std::stol(raw(key), &pos);
    if (pos != raw(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not an integer");
  }
}

uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(raw(key), &pos);
    if (pos != raw(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a u64");
  }
}

double ExperimentConfig::get_double(const std::string& key) const {
  try {
    size_t pos = 0;
    double v = std::stod(raw(key), &pos);
    if (pos != raw(key).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number");
  }
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  return raw(key);
}

std::string ExperimentConfig::print_defaults() {
  std::ostringstream os;
  for (const auto& [k, v] : default_table()) os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace prulab
