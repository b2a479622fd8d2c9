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
//
// The experiment suites: named checks computing measured values against
// the stated bounds and tolerances. Suites are deterministic per config.

#ifndef PRULAB_EXPERIMENTS_HPP
#define PRULAB_EXPERIMENTS_HPP

#include <functional>

#include "adversary.hpp"
#include "report.hpp"

namespace prulab {

using CheckFn = std::function<std::vector<CheckResult>(const ExperimentConfig&)>;

struct CheckDef {
  std::string suite;
  std::string name;
  CheckFn fn;
};

const std::vector<CheckDef>& check_registry();
std::vector<std::string> suite_names();

/// Runs one suite (or "all"); checks run in parallel up to config `jobs`,
/// results assembled in registry order. Throws std::invalid_argument for
/// unknown suites.
ExperimentReport run_verify(const std::string& suite, const ExperimentConfig& cfg);

/// Measured trace distance between the configured oracle pair, with bound
/// and standard error.
ExperimentReport run_distinguish(const ExperimentConfig& cfg);

/// The measured two-sided invariance defect
/// ||D_A V_{<=t} C_A . Q[C,D] - Q[C,D] V_{<=t}||_op on the truncated basis;
/// `v` is the symmetric path-recording operator on the same basis.
double two_sided_defect(const TruncatedBasis& basis, const LinOpPtr& v, int t,
                        const CMatrix& c, const CMatrix& d, uint64_t seed);

}  // namespace prulab

#endif
