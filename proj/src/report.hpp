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

#ifndef PRULAB_REPORT_HPP
#define PRULAB_REPORT_HPP

#include <string>
#include <vector>

#include "config.hpp"

namespace prulab {

/// One measured check. `pass` means measured <= bound + tolerance + 3*se
/// for bound checks, or |measured| <= tolerance for identities (bound 0).
struct CheckResult {
  std::string suite;
  std::string name;
  double measured = 0.0;
  double bound = 0.0;      // 0 for identity checks
  double tolerance = 0.0;
  double se = 0.0;         // Monte-Carlo standard error, 0 for exact checks
  bool vacuous = false;    // bound does not constrain at desk scale
  bool pass = false;
  double runtime_ms = 0.0;
};

struct ExperimentReport {
  int schema = 1;
  std::string version;
  ExperimentConfig config;
  std::vector<CheckResult> checks;
  double wall_clock_ms = 0.0;

  bool passed() const;
  std::string to_json() const;
  std::string to_csv() const;

  static ExperimentReport from_json(const std::string& text);
};

/// Merges reports into one summary with rows sorted by (suite, name).
ExperimentReport merge_reports(const std::vector<ExperimentReport>& reports);

extern const char* kLibraryVersion;

}  // namespace prulab

#endif
