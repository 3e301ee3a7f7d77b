/*
Copyright 2026 The bhlineage Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

// bhlineage: command-line front end over the bhl C API.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bhl/bhl.h"

namespace {

enum Exit { kPass = 0, kTestFailure = 1, kConfigError = 2, kNumericsError = 3 };

int exit_code(bhl_status s) {
  switch (s) {
    case BHL_OK:
      return kPass;
    case BHL_ERR_CONFIG:
    case BHL_ERR_DOMAIN:
    case BHL_ERR_IO:
    case BHL_ERR_INVALID_ARGUMENT:
      return kConfigError;
    case BHL_ERR_NUMERICS:
    case BHL_ERR_CAPACITY:
    case BHL_ERR_INTERNAL:
      return kNumericsError;
  }
  return kNumericsError;
}

int fail(bhl_status s) {
  std::fprintf(stderr, "bhlineage: %s: %s\n", bhl_status_name(s), bhl_last_error());
  return exit_code(s);
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool with_config) {
  if (with_config) sub->add_option("--config", c.config, "JSON experiment config (defaults when omitted)");
  sub->add_option("--seed", c.seed, "base seed, overrides the config");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "output directory, overrides the config");
}

// Owns a config handle for the duration of one command.
struct Config {
  bhl_config* h = nullptr;
  ~Config() { bhl_config_free(h); }
};

bhl_status open_config(const Common& c, Config& cfg) {
  bhl_status s = c.config.empty() ? bhl_config_parse("{}", &cfg.h) : bhl_config_load(c.config.c_str(), &cfg.h);
  if (s != BHL_OK) return s;
  if (c.seed) s = bhl_config_set_seed(cfg.h, *c.seed);
  if (s == BHL_OK && !c.out.empty()) s = bhl_config_set_output_dir(cfg.h, c.out.c_str());
  return s;
}

int run(const std::string& cmd, const Common& c) {
  if (cmd == "selftest") {
    int passed = 0;
    char* report = nullptr;
    const std::string out = c.out.empty() ? "bhl_selftest" : c.out;
    const bhl_status s = bhl_selftest(out.c_str(), c.seed.value_or(20260917), c.threads, &passed, &report);
    if (s != BHL_OK) return fail(s);
    std::fputs(report, stdout);
    bhl_string_free(report);
    std::printf("selftest: %s (artifacts in %s)\n", passed ? "PASS" : "FAIL", out.c_str());
    return passed ? kPass : kTestFailure;
  }

  Config cfg;
  bhl_status s = open_config(c, cfg);
  if (s != BHL_OK) return fail(s);
  if (cmd == "genfun") s = bhl_run_genfun(cfg.h);
  else if (cmd == "simulate") s = bhl_run_simulate(cfg.h, c.threads);
  else if (cmd == "predict") s = bhl_run_predict(cfg.h);
  else if (cmd == "enumerate") s = bhl_run_enumerate(cfg.h);
  else if (cmd == "compare") {
    int passed = 0;
    s = bhl_run_compare(cfg.h, c.threads, &passed);
    if (s != BHL_OK) return fail(s);
    std::printf("compare: %s\n", passed ? "PASS" : "FAIL");
    return passed ? kPass : kTestFailure;
  }
  if (s != BHL_OK) return fail(s);
  std::printf("%s: done\n", cmd.c_str());
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bellman-Harris ancestral lineage simulator and checker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bhl_version()));
  Common common;
  const std::pair<const char*, const char*> commands[] = {
      {"genfun", "tabulate F_t(s) and dF/ds (genfun.csv)"},
      {"simulate", "simulate trees and sample lineages (lineages.csv, summary.json)"},
      {"predict", "rate bias, ancestral rates and marker density (predict.csv)"},
      {"compare", "Monte Carlo against the lineage laws (report.json, bins.csv)"},
      {"enumerate", "exact lattice lineage laws (enumeration.json)"},
      {"selftest", "run the acceptance suite"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), common, std::string(name) != "selftest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfigError;
  }
  return run(app.get_subcommands().front()->get_name(), common);
}
