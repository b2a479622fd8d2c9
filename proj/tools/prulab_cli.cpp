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
// Command-line front end; talks to the engine exclusively through the
// extern-C interface in prulab/prulab.h.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 usage error,
// 3 capacity error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include "prulab/prulab.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;

int status_to_exit(prulab_status st) {
  switch (st) {
    case PRULAB_OK: return kExitPass;
    case PRULAB_ERR_INVALID: return kExitUsage;
    case PRULAB_ERR_CAPACITY: return kExitCapacity;
    default: return kExitUsage;
  }
}

struct ConfigHandle {
  prulab_config* ptr = nullptr;
  ~ConfigHandle() { prulab_config_free(ptr); }
};

struct ReportHandle {
  prulab_report* ptr = nullptr;
  ~ReportHandle() { prulab_report_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { prulab_string_free(ptr); }
};

int fail(prulab_status st, const char* what) {
  std::cerr << "error: " << what << ": " << prulab_last_error() << "\n";
  return status_to_exit(st);
}

int build_config(ConfigHandle& cfg, const std::string& config_path,
                 const std::vector<std::pair<std::string, std::string>>& overrides) {
  prulab_status st = prulab_config_create(&cfg.ptr);
  if (st != PRULAB_OK) return fail(st, "config");
  if (!config_path.empty()) {
    st = prulab_config_load_file(cfg.ptr, config_path.c_str());
    if (st != PRULAB_OK) return fail(st, "config");
  }
  for (const auto& [key, value] : overrides) {
    st = prulab_config_set(cfg.ptr, key.c_str(), value.c_str());
    if (st != PRULAB_OK) return fail(st, "config");
  }
  return -1;  // keep going
}

int emit_report(const prulab_report* rep, const std::string& out_path,
                const std::string& format, bool print_lines) {
  if (print_lines) {
    size_t count = prulab_report_check_count(rep);
    for (size_t i = 0; i < count; ++i) {
      OwnedString line;
      if (prulab_report_check_line(rep, i, &line.ptr) == PRULAB_OK)
        std::cout << line.ptr << "\n";
    }
  }
  OwnedString body;
  prulab_status st = (format == "csv") ? prulab_report_csv(rep, &body.ptr)
                                       : prulab_report_json(rep, &body.ptr);
  if (st != PRULAB_OK) return fail(st, "report");
  if (out_path.empty()) {
    if (!print_lines) std::cout << body.ptr << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return kExitUsage;
    }
    out << body.ptr;
  }
  return prulab_report_passed(rep) ? kExitPass : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prulab: path-recording oracle and pseudorandom-unitary "
               "verification lab"};
  app.require_subcommand(0, 1);

  std::string config_path, out_path, format = "json", suite = "all";
  uint64_t seed = 0;
  bool seed_set = false, print_defaults = false;
  long jobs = 0;

  app.add_flag("--print-defaults", print_defaults,
               "Print the default configuration and exit");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Configuration file (key = value)");
    cmd->add_option("--seed", seed, "Master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--jobs", jobs, "Parallel check limit");
    cmd->add_option("--out", out_path, "Report output path");
    cmd->add_option("--format", format, "Report format: json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", suite,
                     "identities | isometries | twirls | invariance | strong | "
                     "restricted | gluing | all");
  add_common(verify);

  CLI::App* distinguish =
      app.add_subcommand("distinguish", "Measure a trace distance against its bound");
  add_common(distinguish);
  std::string left, right;
  distinguish->add_option("--left", left, "First oracle (v, v-sym, pfo, pf-clifford, haar-mc)");
  distinguish->add_option("--right", right, "Second oracle");

  CLI::App* report_cmd =
      app.add_subcommand("report", "Merge report files into one summary");
  std::vector<std::string> report_files;
  report_cmd->add_option("files", report_files, "Report JSON files")->required();
  report_cmd->add_option("--out", out_path, "Merged output path");
  report_cmd->add_option("--format", format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (print_defaults) {
    OwnedString text;
    prulab_status st = prulab_config_defaults(&text.ptr);
    if (st != PRULAB_OK) return fail(st, "defaults");
    std::cout << text.ptr;
    return kExitPass;
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  if (seed_set) overrides.emplace_back("seed", std::to_string(seed));
  if (jobs > 0) overrides.emplace_back("jobs", std::to_string(jobs));
  if (!left.empty()) overrides.emplace_back("distinguish_left", left);
  if (!right.empty()) overrides.emplace_back("distinguish_right", right);

  if (report_cmd->parsed()) {
    std::vector<prulab_report*> reports;
    auto cleanup = [&] {
      for (prulab_report* r : reports) prulab_report_free(r);
    };
    for (const std::string& file : report_files) {
      std::ifstream in(file);
      if (!in) {
        std::cerr << "error: cannot read " << file << "\n";
        cleanup();
        return kExitUsage;
      }
      std::stringstream buf;
      buf << in.rdbuf();
      prulab_report* rep = nullptr;
      prulab_status st = prulab_report_parse_json(buf.str().c_str(), &rep);
      if (st != PRULAB_OK) {
        std::cerr << "error: " << file << ": " << prulab_last_error() << "\n";
        cleanup();
        return status_to_exit(st);
      }
      reports.push_back(rep);
    }
    ReportHandle merged;
    prulab_status st = prulab_report_merge(
        const_cast<const prulab_report* const*>(reports.data()), reports.size(),
        &merged.ptr);
    cleanup();
    if (st != PRULAB_OK) return fail(st, "merge");
    int code = emit_report(merged.ptr, out_path, format, false);
    return code == kExitCheckFailed ? kExitPass : code;  // merge never re-judges
  }

  ConfigHandle cfg;
  int early = build_config(cfg, config_path, overrides);
  if (early >= 0) return early;

  ReportHandle rep;
  if (distinguish->parsed()) {
    prulab_status st = prulab_distinguish(cfg.ptr, &rep.ptr);
    if (st != PRULAB_OK) return fail(st, "distinguish");
    return emit_report(rep.ptr, out_path, format, true);
  }

  // Default action: verify.
  prulab_status st = prulab_verify(cfg.ptr, suite.c_str(), &rep.ptr);
  if (st != PRULAB_OK) return fail(st, "verify");
  return emit_report(rep.ptr, out_path, format, true);
}
