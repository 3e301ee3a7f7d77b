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
#include <filesystem>
#include <sstream>

#include "bhl/errors.hpp"
#include "bhl/experiment.hpp"
#include "bhl/io.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bhl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bhl_test_experiment" / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig config(const std::string& json_text, const std::string& name) {
  auto cfg = parse_config(json_text);
  cfg.output_dir = scratch(name).string();
  return cfg;
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream in(read_text_file(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("config defaults, round trip and validation") {
  const auto c = parse_config("{}");
  CHECK(c.offspring == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(c.predict.t.size() == 11);
  CHECK(c.predict.ell == std::vector<int>{1, 2});
  CHECK(parse_config(config_to_json(c)) == c);

  const auto g = parse_config(R"({"offspring":[0.2,0.3,0.5],"lifetime":{"law":"gamma","shape":2,"scale":0.5},
    "horizon":3,"scheme":"leftmost","slice":{"j":2,"sizes":[2,1]},"genfun":{"steps":300}})");
  CHECK(g.slice.ks == std::vector<int>{0, 0});
  CHECK(g.lifetime.make().is_gamma());
  CHECK(parse_config(config_to_json(g)) == g);

  CHECK_THROWS_AS(parse_config(R"({"offspring":[0.5,0.6]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"replicate":10})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"horizon":-1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"horizon":"two"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scheme":"random"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"lifetime":{"law":"exponential","shape":2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"slice":{"j":1,"sizes":[2],"ks":[2]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"histogram":{"quadrature_order":4}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"genfun":{"solver":"markov"},"lifetime":{"law":"gamma","shape":2,"scale":1}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
}

TEST_CASE("parallel_for is ordered and propagates errors") {
  std::vector<std::size_t> out(1000);
  parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = i * i; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  CHECK_THROWS_AS(parallel_for(500, 4, [](std::size_t i) { if (i == 321) throw DomainError("x"); }), DomainError);
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
  auto cfg = config(R"({"offspring":[0.2,0.3,0.5],"horizon":2,"scheme":"palm","replicates":1000,"trace_trees":2})",
                    "det1");
  run_simulate(cfg, 1);
  auto cfg8 = cfg;
  cfg8.output_dir = scratch("det8").string();
  run_simulate(cfg8, 8);
  auto again = cfg;
  again.output_dir = scratch("det1b").string();
  run_simulate(again, 1);
  const auto a = read_text_file(fs::path(cfg.output_dir) / "lineages.csv");
  CHECK(a == read_text_file(fs::path(cfg8.output_dir) / "lineages.csv"));
  CHECK(a == read_text_file(fs::path(again.output_dir) / "lineages.csv"));
  CHECK(lines(fs::path(cfg.output_dir) / "traces" / "tree_1.csv")[0] == "id,parent,birth,death,n_children");
  CHECK(lines(fs::path(cfg.output_dir) / "lineages.csv")[0] == "scheme,replicate,survived,J,weight,S,times,sizes,ks");
}

TEST_CASE("simulate examples") {
  // The root itself is alive at T with probability e^{-T}; T = 50 makes that negligible.
  auto dead = config(R"({"offspring":[1.0],"horizon":50,"replicates":1000})", "dead");
  run_simulate(dead, 2);
  CHECK(lines(fs::path(dead.output_dir) / "lineages.csv").size() == 1);
  auto summary = nlohmann::json::parse(read_text_file(fs::path(dead.output_dir) / "summary.json"));
  CHECK(summary["survival_fraction"].get<double>() == 0.0);
  CHECK(summary["config"]["max_nodes"].get<std::uint64_t>() == 1'000'000);

  auto crit = config(R"({"replicates":20000})", "crit");
  run_simulate(crit, 2);
  summary = nlohmann::json::parse(read_text_file(fs::path(crit.output_dir) / "summary.json"));
  const double p = summary["survival_fraction"].get<double>();
  CHECK(std::abs(p - 0.5) <= 3.0 * std::sqrt(0.25 / 20000));

  auto capped = config(R"({"offspring":[0,0,1],"horizon":8,"replicates":100,"max_nodes":50})", "capped");
  CHECK_THROWS_AS(run_simulate(capped, 1), CapacityError);
}

TEST_CASE("genfun and predict outputs") {
  auto one = config(R"({"offspring":[0,1],"genfun":{"steps":100,"s_points":51}})", "one");
  const auto rows = lines(run_genfun(one));
  CHECK(rows[0] == "t,s,F,dFds");
  for (std::size_t i = 1; i < rows.size(); i += 37) {
    std::istringstream in(rows[i]);
    std::string t, s, f, df;
    std::getline(in, t, ',');
    std::getline(in, s, ',');
    std::getline(in, f, ',');
    std::getline(in, df, ',');
    CHECK(std::stod(f) == doctest::Approx(std::stod(s)).epsilon(1e-12));
  }

  auto crit = config("{}", "critgf");
  const auto crows = lines(run_genfun(crit));
  for (const auto& r : crows) {
    if (r.rfind("t,", 0) == 0) continue;
    std::istringstream in(r);
    std::string t, s, f;
    std::getline(in, t, ',');
    std::getline(in, s, ',');
    std::getline(in, f, ',');
    if (std::stod(s) != 0.0) continue;
    const double tv = std::stod(t);
    CHECK(std::abs(std::stod(f) - tv / (tv + 2)) <= 1e-6);
  }

  const auto prow = lines(run_predict(crit));
  CHECK(prow[0] == "t,ell,B,rate,s,s_density");
  CHECK(prow.size() == 1 + 11 * 2 + 21);
  CHECK(prow[1].rfind("0,1,1", 0) == 0);
}

TEST_CASE("enumerate output") {
  auto cfg = config(R"({"offspring":[0.3,0.2,0.5],"lifetime":{"law":"deterministic","value":1},"horizon":3})", "enum");
  const auto j = nlohmann::json::parse(read_text_file(run_enumerate(cfg)));
  CHECK(std::abs(j["totals"]["uniform"].get<double>() - 1.0) <= 1e-12);
  CHECK(std::abs(j["totals"]["leftmost"].get<double>() - 1.0) <= 1e-12);
  for (const auto& e : j["uniform"])
    CHECK(std::abs(e["probability"].get<double>() - e["formula"].get<double>()) <= 1e-12);
  auto bad = config("{}", "enumbad");
  CHECK_THROWS_AS(run_enumerate(bad), ConfigError);
}

TEST_CASE("compare: uniform marker, exponential") {
  auto cfg = config(R"({"replicates":40000,"base_seed":11})", "cmp_uniform");
  const auto rep = run_compare(cfg, 2);
  for (const auto& t : rep.tests) INFO(t.test << " " << t.detail << " p=" << t.p_value);
  CHECK(rep.passed());
  CHECK(rep.find("uniform_slice"));
  CHECK(rep.find("s_density"));
  const auto j = nlohmann::json::parse(read_text_file(fs::path(cfg.output_dir) / "report.json"));
  CHECK(j["verdict"] == "PASS");
  CHECK(lines(fs::path(cfg.output_dir) / "bins.csv")[0] == "test,bin,label,observed,expected,mc_error,quad_error");
}

TEST_CASE("compare: leftmost, gamma lifetimes, two events") {
  auto cfg = config(R"({"offspring":[0.3,0.2,0.5],"lifetime":{"law":"gamma","shape":2,"scale":0.5},"horizon":2,
    "scheme":"leftmost","replicates":40000,"slice":{"j":2,"sizes":[2,2],"ks":[1,0]},"histogram":{"t_bins":5},
    "genfun":{"steps":400}})", "cmp_left");
  const auto rep = run_compare(cfg, 2);
  for (const auto& t : rep.tests) CHECK_MESSAGE(t.passed, t.test, " ", t.detail, " p=", t.p_value);
}

TEST_CASE("compare: palm, exponential and gamma") {
  auto cfg = config(R"({"offspring":[0.2,0.3,0.5],"horizon":2,"scheme":"palm","replicates":40000})", "cmp_palm");
  const auto rep = run_compare(cfg, 2);
  for (const auto& t : rep.tests) CHECK_MESSAGE(t.passed, t.test, " ", t.detail, " p=", t.p_value);
  CHECK(rep.find("palm_interevent_ks"));

  auto g = config(R"({"offspring":[0.2,0.3,0.5],"lifetime":{"law":"gamma","shape":3,"scale":0.3},"horizon":2,
    "scheme":"palm","replicates":40000,"genfun":{"steps":400}})", "cmp_palm_gamma");
  const auto grep = run_compare(g, 2);
  for (const auto& t : grep.tests) CHECK_MESSAGE(t.passed, t.test, " ", t.detail, " p=", t.p_value);
  CHECK(!grep.find("palm_interevent_ks"));
}

TEST_CASE("compare: lattice schemes against enumeration") {
  for (const char* scheme : {"uniform", "leftmost", "palm"}) {
    auto cfg = config(std::string(R"({"offspring":[0.3,0.2,0.5],"lifetime":{"law":"deterministic","value":1},
      "horizon":3,"replicates":30000,"scheme":")") + scheme + "\"}",
                      std::string("cmp_lattice_") + scheme);
    const auto rep = run_compare(cfg, 2);
    REQUIRE(rep.tests.size() == 1);
    CHECK_MESSAGE(rep.tests[0].passed, rep.tests[0].test, " p=", rep.tests[0].p_value);
  }
}

TEST_CASE("compare needs enough survivors") {
  auto cfg = config(R"({"replicates":500})", "few");
  CHECK_THROWS_AS(run_compare(cfg, 1), ConfigError);
}
