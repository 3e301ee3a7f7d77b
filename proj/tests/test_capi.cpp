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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "bhl/bhl.h"
#include "doctest.h"

namespace fs = std::filesystem;

TEST_CASE("offspring and lifetime handles") {
  const double probs[] = {0.2, 0.3, 0.5};
  bhl_offspring* d = nullptr;
  REQUIRE(bhl_offspring_new(probs, 3, &d) == BHL_OK);
  double v = 0.0;
  CHECK(bhl_offspring_pgf(d, 0.5, &v) == BHL_OK);
  CHECK(v == doctest::Approx(0.2 + 0.15 + 0.125));
  CHECK(bhl_offspring_pgf_derivative(d, 1.0, &v) == BHL_OK);
  CHECK(v == doctest::Approx(1.3));
  CHECK(bhl_offspring_mean(d) == doctest::Approx(1.3));
  CHECK(bhl_offspring_pgf(d, 1.5, &v) == BHL_ERR_DOMAIN);
  CHECK(std::strlen(bhl_last_error()) > 0);
  bhl_offspring_free(d);

  const double bad[] = {0.5, 0.6};
  bhl_offspring* b = nullptr;
  CHECK(bhl_offspring_new(bad, 2, &b) == BHL_ERR_CONFIG);
  CHECK(b == nullptr);
  CHECK(bhl_offspring_new(nullptr, 2, &b) == BHL_ERR_INVALID_ARGUMENT);

  bhl_lifetime* law = nullptr;
  REQUIRE(bhl_lifetime_exponential(2.0, &law) == BHL_OK);
  CHECK(bhl_lifetime_tail(law, 1.0, &v) == BHL_OK);
  CHECK(v == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  bhl_lifetime_free(law);
  CHECK(bhl_lifetime_gamma(-1.0, 1.0, &law) == BHL_ERR_CONFIG);
  bhl_lifetime_free(nullptr);
}

TEST_CASE("genfun handle") {
  const double probs[] = {0.5, 0.0, 0.5};
  bhl_offspring* d = nullptr;
  bhl_lifetime* law = nullptr;
  bhl_genfun* g = nullptr;
  REQUIRE(bhl_offspring_new(probs, 3, &d) == BHL_OK);
  REQUIRE(bhl_lifetime_exponential(1.0, &law) == BHL_OK);
  REQUIRE(bhl_genfun_build(d, law, 2.0, 0, 0, &g) == BHL_OK);
  double v = 0.0;
  CHECK(bhl_genfun_extinction(g, 2.0, &v) == BHL_OK);
  CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(bhl_genfun_eval(g, 1.0, 0.0, &v) == BHL_OK);
  CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(bhl_genfun_eval_deriv(g, 2.0, 1.0, &v) == BHL_OK);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(bhl_rate_bias(g, 1.0, 1, &v) == BHL_OK);
  CHECK(std::abs(v - 1.0) <= 1e-10);
  CHECK(bhl_s_density(g, 0.5, &v) == BHL_OK);
  CHECK(v > 0.0);
  CHECK(bhl_genfun_eval(g, 3.0, 0.5, &v) == BHL_ERR_DOMAIN);
  CHECK(bhl_genfun_build(d, law, 2.0, 10, 0, &g) == BHL_ERR_CONFIG);
  bhl_genfun_free(g);
  bhl_lifetime_free(law);
  bhl_offspring_free(d);
}

TEST_CASE("config handle and runs") {
  const auto dir = fs::temp_directory_path() / "bhl_test_capi";
  fs::remove_all(dir);
  bhl_config* cfg = nullptr;
  REQUIRE(bhl_config_parse(R"({"offspring":[0.3,0.2,0.5],"lifetime":{"law":"deterministic","value":1},"horizon":3,
    "replicates":3000,"scheme":"leftmost"})", &cfg) == BHL_OK);
  CHECK(bhl_config_set_seed(cfg, 99) == BHL_OK);
  CHECK(bhl_config_set_output_dir(cfg, dir.string().c_str()) == BHL_OK);
  char* json = nullptr;
  REQUIRE(bhl_config_to_json(cfg, &json) == BHL_OK);
  CHECK(std::string(json).find("\"base_seed\": 99") != std::string::npos);
  bhl_config* again = nullptr;
  CHECK(bhl_config_parse(json, &again) == BHL_OK);
  bhl_config_free(again);
  bhl_string_free(json);

  CHECK(bhl_run_enumerate(cfg) == BHL_OK);
  CHECK(fs::exists(dir / "enumeration.json"));
  CHECK(bhl_run_simulate(cfg, 2) == BHL_OK);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(bhl_run_genfun(cfg) == BHL_OK);
  CHECK(bhl_run_predict(cfg) == BHL_OK);
  int passed = -1;
  CHECK(bhl_run_compare(cfg, 2, &passed) == BHL_OK);
  CHECK(passed == 1);
  bhl_config_free(cfg);

  CHECK(bhl_config_parse("{\"horizon\": 0}", &cfg) == BHL_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(bhl_config_load("/nonexistent/bhl.json", &cfg) == BHL_ERR_IO);
  CHECK(bhl_run_genfun(nullptr) == BHL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(bhl_status_name(BHL_ERR_NUMERICS)) == "numerics error");
  CHECK(std::string(bhl_version()).size() > 0);
}
