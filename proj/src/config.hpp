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

#ifndef PRULAB_CONFIG_HPP
#define PRULAB_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

namespace prulab {

/// Experiment configuration: a flat key = value table with typed
/// accessors. Every field is echoed into reports so a run can be
/// reproduced from its report alone.
class ExperimentConfig {
 public:
  ExperimentConfig();  // defaults

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);

  /// Known-key assignment; throws std::invalid_argument on unknown keys
  /// or unparsable values.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& raw(const std::string& key) const;

  long get_int(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_string(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// The full default table, one `key = value` line each.
  static std::string print_defaults();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace prulab

#endif
