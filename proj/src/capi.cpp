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

#include "prulab/prulab.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "experiments.hpp"

using namespace prulab;

struct prulab_config {
  ExperimentConfig cfg;
};

struct prulab_report {
  ExperimentReport rep;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
prulab_status guarded(Fn&& fn) {
  try {
    fn();
    return PRULAB_OK;
  } catch (const CapacityError& e) {
    g_last_error = e.what();
    return PRULAB_ERR_CAPACITY;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return PRULAB_ERR_INVALID;
  } catch (const std::out_of_range& e) {
    g_last_error = e.what();
    return PRULAB_ERR_INVALID;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PRULAB_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* prulab_version(void) { return kLibraryVersion; }

const char* prulab_last_error(void) { return g_last_error.c_str(); }

void prulab_string_free(char* s) { std::free(s); }

prulab_status prulab_config_create(prulab_config** out) {
  if (!out) return PRULAB_ERR_INVALID;
  return guarded([&] { *out = new prulab_config(); });
}

void prulab_config_free(prulab_config* cfg) { delete cfg; }

prulab_status prulab_config_load_file(prulab_config* cfg, const char* path) {
  if (!cfg || !path) return PRULAB_ERR_INVALID;
  return guarded([&] { cfg->cfg = ExperimentConfig::from_file(path); });
}

prulab_status prulab_config_set(prulab_config* cfg, const char* key,
                                const char* value) {
  if (!cfg || !key || !value) return PRULAB_ERR_INVALID;
  return guarded([&] { cfg->cfg.set(key, value); });
}

prulab_status prulab_config_defaults(char** out) {
  if (!out) return PRULAB_ERR_INVALID;
  return guarded([&] { *out = dup_string(ExperimentConfig::print_defaults()); });
}

prulab_status prulab_verify(const prulab_config* cfg, const char* suite,
                            prulab_report** out) {
  if (!cfg || !out) return PRULAB_ERR_INVALID;
  return guarded([&] {
    std::string name = suite ? suite : cfg->cfg.get_string("experiment");
    auto* rep = new prulab_report();
    try {
      rep->rep = run_verify(name, cfg->cfg);
    } catch (...) {
      delete rep;
      throw;
    }
    *out = rep;
  });
}

prulab_status prulab_distinguish(const prulab_config* cfg, prulab_report** out) {
  if (!cfg || !out) return PRULAB_ERR_INVALID;
  return guarded([&] {
    auto* rep = new prulab_report();
    try {
      rep->rep = run_distinguish(cfg->cfg);
    } catch (...) {
      delete rep;
      throw;
    }
    *out = rep;
  });
}

void prulab_report_free(prulab_report* rep) { delete rep; }

prulab_status prulab_report_json(const prulab_report* rep, char** out) {
  if (!rep || !out) return PRULAB_ERR_INVALID;
  return guarded([&] { *out = dup_string(rep->rep.to_json()); });
}

prulab_status prulab_report_csv(const prulab_report* rep, char** out) {
  if (!rep || !out) return PRULAB_ERR_INVALID;
  return guarded([&] { *out = dup_string(rep->rep.to_csv()); });
}

int prulab_report_passed(const prulab_report* rep) {
  return rep && rep->rep.passed() ? 1 : 0;
}

size_t prulab_report_check_count(const prulab_report* rep) {
  return rep ? rep->rep.checks.size() : 0;
}

prulab_status prulab_report_check_line(const prulab_report* rep, size_t index,
                                       char** out) {
  if (!rep || !out || index >= rep->rep.checks.size()) return PRULAB_ERR_INVALID;
  return guarded([&] {
    const CheckResult& c = rep->rep.checks[index];
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s %s/%s measured=%.6g bound=%.6g tol=%.3g se=%.3g%s",
                  c.pass ? "PASS" : "FAIL", c.suite.c_str(), c.name.c_str(),
                  c.measured, c.bound, c.tolerance, c.se,
                  c.vacuous ? " (bound vacuous at desk scale)" : "");
    *out = dup_string(buf);
  });
}

prulab_status prulab_report_parse_json(const char* text, prulab_report** out) {
  if (!text || !out) return PRULAB_ERR_INVALID;
  return guarded([&] {
    auto* rep = new prulab_report();
    try {
      rep->rep = ExperimentReport::from_json(text);
    } catch (...) {
      delete rep;
      throw;
    }
    *out = rep;
  });
}

prulab_status prulab_report_merge(const prulab_report* const* reports,
                                  size_t count, prulab_report** out) {
  if (!reports || !out) return PRULAB_ERR_INVALID;
  return guarded([&] {
    std::vector<ExperimentReport> reps;
    for (size_t i = 0; i < count; ++i) {
      if (!reports[i]) throw std::invalid_argument("merge: null report");
      reps.push_back(reports[i]->rep);
    }
    auto* rep = new prulab_report();
    rep->rep = merge_reports(reps);
    *out = rep;
  });
}

}  // extern "C"
