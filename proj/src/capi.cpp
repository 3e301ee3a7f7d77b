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

#include "bhl/bhl.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "bhl/acceptance.hpp"
#include "bhl/errors.hpp"
#include "bhl/experiment.hpp"
#include "bhl/genfun.hpp"
#include "bhl/theory.hpp"

struct bhl_config {
  bhl::ExperimentConfig cfg;
};
struct bhl_offspring {
  bhl::OffspringDistribution d;
};
struct bhl_lifetime {
  bhl::LifetimeLaw law;
};
struct bhl_genfun {
  bhl::GenFunTable table;
};

namespace {

thread_local std::string last_error;

bhl_status status_of(bhl::ErrorKind kind) {
  switch (kind) {
    case bhl::ErrorKind::Config:
      return BHL_ERR_CONFIG;
    case bhl::ErrorKind::Numerics:
      return BHL_ERR_NUMERICS;
    case bhl::ErrorKind::Domain:
      return BHL_ERR_DOMAIN;
    case bhl::ErrorKind::Capacity:
      return BHL_ERR_CAPACITY;
    case bhl::ErrorKind::Io:
      return BHL_ERR_IO;
  }
  return BHL_ERR_INTERNAL;
}

template <typename F>
bhl_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return BHL_OK;
  } catch (const bhl::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return BHL_ERR_CAPACITY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BHL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return BHL_ERR_INTERNAL;
  }
}

bhl_status invalid(const char* what) {
  last_error = what;
  return BHL_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  auto* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int thread_count(int threads) { return threads > 0 ? threads : 1; }

}  // namespace

extern "C" {

const char* bhl_last_error(void) { return last_error.c_str(); }

const char* bhl_status_name(bhl_status status) {
  switch (status) {
    case BHL_OK:
      return "ok";
    case BHL_ERR_CONFIG:
      return "config error";
    case BHL_ERR_NUMERICS:
      return "numerics error";
    case BHL_ERR_DOMAIN:
      return "domain error";
    case BHL_ERR_CAPACITY:
      return "capacity error";
    case BHL_ERR_IO:
      return "io error";
    case BHL_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case BHL_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* bhl_version(void) { return "0.1.0"; }

void bhl_string_free(char* s) { delete[] s; }

bhl_status bhl_config_parse(const char* json, bhl_config** out) {
  if (!json || !out) return invalid("bhl_config_parse: null argument");
  *out = nullptr;
  return guard([&] { *out = new bhl_config{bhl::parse_config(json)}; });
}

bhl_status bhl_config_load(const char* path, bhl_config** out) {
  if (!path || !out) return invalid("bhl_config_load: null argument");
  *out = nullptr;
  return guard([&] { *out = new bhl_config{bhl::load_config(path)}; });
}

void bhl_config_free(bhl_config* cfg) { delete cfg; }

bhl_status bhl_config_set_seed(bhl_config* cfg, uint64_t seed) {
  if (!cfg) return invalid("bhl_config_set_seed: null config");
  cfg->cfg.base_seed = seed;
  return BHL_OK;
}

bhl_status bhl_config_set_output_dir(bhl_config* cfg, const char* dir) {
  if (!cfg || !dir) return invalid("bhl_config_set_output_dir: null argument");
  cfg->cfg.output_dir = dir;
  return BHL_OK;
}

bhl_status bhl_config_to_json(const bhl_config* cfg, char** out) {
  if (!cfg || !out) return invalid("bhl_config_to_json: null argument");
  return guard([&] { *out = copy_string(bhl::config_to_json(cfg->cfg)); });
}

bhl_status bhl_run_genfun(const bhl_config* cfg) {
  if (!cfg) return invalid("bhl_run_genfun: null config");
  return guard([&] { bhl::run_genfun(cfg->cfg); });
}

bhl_status bhl_run_simulate(const bhl_config* cfg, int threads) {
  if (!cfg) return invalid("bhl_run_simulate: null config");
  return guard([&] { bhl::run_simulate(cfg->cfg, thread_count(threads)); });
}

bhl_status bhl_run_predict(const bhl_config* cfg) {
  if (!cfg) return invalid("bhl_run_predict: null config");
  return guard([&] { bhl::run_predict(cfg->cfg); });
}

bhl_status bhl_run_compare(const bhl_config* cfg, int threads, int* passed) {
  if (!cfg || !passed) return invalid("bhl_run_compare: null argument");
  *passed = 0;
  return guard([&] { *passed = bhl::run_compare(cfg->cfg, thread_count(threads)).passed() ? 1 : 0; });
}

bhl_status bhl_run_enumerate(const bhl_config* cfg) {
  if (!cfg) return invalid("bhl_run_enumerate: null config");
  return guard([&] { bhl::run_enumerate(cfg->cfg); });
}

bhl_status bhl_selftest(const char* out_dir, uint64_t seed, int threads, int* passed, char** report) {
  if (!out_dir || !passed) return invalid("bhl_selftest: null argument");
  *passed = 0;
  if (report) *report = nullptr;
  return guard([&] {
    bhl::AcceptanceOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.threads = thread_count(threads);
    std::ostringstream lines;
    bool all = true;
    for (const auto& r : bhl::run_acceptance(opts)) {
      all = all && r.passed;
      lines << r.id << (r.passed ? " PASS " : " FAIL ") << r.seconds << "s " << r.title << ": " << r.detail << '\n';
    }
    *passed = all ? 1 : 0;
    if (report) *report = copy_string(lines.str());
  });
}

bhl_status bhl_offspring_new(const double* probs, size_t n, bhl_offspring** out) {
  if (!probs || !out) return invalid("bhl_offspring_new: null argument");
  *out = nullptr;
  return guard([&] { *out = new bhl_offspring{bhl::OffspringDistribution(std::vector<double>(probs, probs + n))}; });
}

void bhl_offspring_free(bhl_offspring* d) { delete d; }

bhl_status bhl_offspring_pgf(const bhl_offspring* d, double s, double* out) {
  if (!d || !out) return invalid("bhl_offspring_pgf: null argument");
  return guard([&] { *out = d->d.pgf(s); });
}

bhl_status bhl_offspring_pgf_derivative(const bhl_offspring* d, double s, double* out) {
  if (!d || !out) return invalid("bhl_offspring_pgf_derivative: null argument");
  return guard([&] { *out = d->d.pgf_derivative(s); });
}

double bhl_offspring_mean(const bhl_offspring* d) { return d ? d->d.mean() : 0.0; }

bhl_status bhl_lifetime_exponential(double rate, bhl_lifetime** out) {
  if (!out) return invalid("bhl_lifetime_exponential: null argument");
  *out = nullptr;
  return guard([&] { *out = new bhl_lifetime{bhl::LifetimeLaw::exponential(rate)}; });
}

bhl_status bhl_lifetime_deterministic(double value, bhl_lifetime** out) {
  if (!out) return invalid("bhl_lifetime_deterministic: null argument");
  *out = nullptr;
  return guard([&] { *out = new bhl_lifetime{bhl::LifetimeLaw::deterministic(value)}; });
}

bhl_status bhl_lifetime_gamma(double shape, double scale, bhl_lifetime** out) {
  if (!out) return invalid("bhl_lifetime_gamma: null argument");
  *out = nullptr;
  return guard([&] { *out = new bhl_lifetime{bhl::LifetimeLaw::gamma(shape, scale)}; });
}

void bhl_lifetime_free(bhl_lifetime* law) { delete law; }

bhl_status bhl_lifetime_tail(const bhl_lifetime* law, double t, double* out) {
  if (!law || !out) return invalid("bhl_lifetime_tail: null argument");
  return guard([&] { *out = law->law.tail(t); });
}

bhl_status bhl_genfun_build(const bhl_offspring* d, const bhl_lifetime* law, double horizon, int steps, int s_points,
                            bhl_genfun** out) {
  if (!d || !law || !out) return invalid("bhl_genfun_build: null argument");
  *out = nullptr;
  return guard([&] {
    bhl::GenFunOptions opts;
    if (steps > 0) opts.steps = steps;
    if (s_points > 0) opts.s_points = s_points;
    *out = new bhl_genfun{bhl::build_for_law(d->d, law->law, horizon, opts)};
  });
}

void bhl_genfun_free(bhl_genfun* table) { delete table; }

bhl_status bhl_genfun_eval(const bhl_genfun* table, double t, double s, double* out) {
  if (!table || !out) return invalid("bhl_genfun_eval: null argument");
  return guard([&] { *out = table->table.eval(t, s); });
}

bhl_status bhl_genfun_eval_deriv(const bhl_genfun* table, double t, double s, double* out) {
  if (!table || !out) return invalid("bhl_genfun_eval_deriv: null argument");
  return guard([&] { *out = table->table.eval_deriv(t, s); });
}

bhl_status bhl_genfun_extinction(const bhl_genfun* table, double t, double* out) {
  if (!table || !out) return invalid("bhl_genfun_extinction: null argument");
  return guard([&] { *out = table->table.extinction_prob(t); });
}

bhl_status bhl_rate_bias(const bhl_genfun* table, double t, int ell, double* out) {
  if (!table || !out) return invalid("bhl_rate_bias: null argument");
  return guard([&] { *out = bhl::rate_bias(table->table, t, ell); });
}

bhl_status bhl_s_density(const bhl_genfun* table, double s, double* out) {
  if (!table || !out) return invalid("bhl_s_density: null argument");
  return guard([&] { *out = bhl::s_density(table->table, s); });
}

}  // extern "C"
