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

#include "bhl/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "bhl/enumerate.hpp"
#include "bhl/errors.hpp"
#include "bhl/experiment.hpp"
#include "bhl/genfun.hpp"
#include "bhl/io.hpp"
#include "bhl/stats.hpp"
#include "bhl/theory.hpp"
#include "json.hpp"

namespace bhl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path subdir(const AcceptanceOptions& o, const std::string& name) {
  const auto dir = o.out_dir / name;
  ensure_directory(dir);
  return dir;
}

std::string num(double v) { return format_double(v); }

// AC-1: closed forms for the Yule and critical binary processes.
Verdict ac1(const AcceptanceOptions& o) {
  const double T = 2.0;
  const auto yule = build_markov(OffspringDistribution({0.0, 0.0, 1.0}), 1.0, T);
  const auto crit = build_markov(OffspringDistribution({0.5, 0.0, 0.5}), 1.0, T);
  double err_yule = 0.0, err_crit = 0.0, err_crit0 = 0.0;
  for (std::size_t i = 0; i < yule.t_size(); ++i) {
    const double t = yule.t_grid()[i], e = std::exp(-t);
    for (std::size_t j = 0; j < yule.s_size(); ++j) {
      const double s = yule.s_grid()[j];
      err_yule = std::max(err_yule, std::abs(yule.value(i, j) - s * e / (1.0 - s * (1.0 - e))));
      const double c = 1.0 - 2.0 * (1.0 - s) / (2.0 + t * (1.0 - s));
      err_crit = std::max(err_crit, std::abs(crit.value(i, j) - c));
    }
    err_crit0 = std::max(err_crit0, std::abs(crit.value(i, 0) - t / (t + 2.0)));
  }
  json j{{"horizon", T},
         {"t_points", yule.t_size()},
         {"s_points", yule.s_size()},
         {"yule_sup_error", err_yule},
         {"critical_sup_error", err_crit},
         {"critical_extinction_sup_error", err_crit0},
         {"tolerance", 1e-6}};
  write_text_file(subdir(o, "ac1") / "genfun_errors.json", dump(j));
  const bool ok = err_yule <= 1e-6 && err_crit <= 1e-6 && err_crit0 <= 1e-6;
  return {ok, "sup error yule " + num(err_yule) + ", critical " + num(err_crit) + " on " +
                  std::to_string(yule.t_size() - 1) + " steps x " + std::to_string(yule.s_size()) + " s-nodes"};
}

Verdict from_report(const CompareReport& rep, const std::vector<std::string>& required) {
  Verdict v{true, ""};
  for (const auto& name : required) {
    const auto* t = rep.find(name);
    if (!v.detail.empty()) v.detail += "; ";
    if (!t) {
      v.passed = false;
      v.detail += name + " missing";
      continue;
    }
    v.passed = v.passed && t->passed;
    v.detail += name + (t->passed ? " PASS" : " FAIL") + " (p=" + num(t->p_value) + ", tv=" + num(t->tv) + ")";
  }
  return v;
}

// AC-2: uniform-marker lineage law, one-event slice, plus the marker density.
Verdict ac2(const AcceptanceOptions& o) {
  auto cfg = parse_config(R"({"offspring":[0.5,0.0,0.5],"lifetime":{"law":"exponential","rate":1},"horizon":2,
    "scheme":"uniform","replicates":200000,"slice":{"j":1,"sizes":[2]},
    "histogram":{"t_bins":10,"s_bins":10,"quadrature_order":5}})");
  cfg.base_seed = o.seed + 2;
  cfg.output_dir = subdir(o, "ac2").string();
  const auto rep = run_compare(cfg, o.threads);
  return from_report(rep, {"uniform_slice", "s_density"});
}

// AC-3: exact enumeration against the lattice formula.
Verdict ac3(const AcceptanceOptions& o) {
  const OffspringDistribution d({0.3, 0.2, 0.5});
  auto cfg = parse_config(R"({"offspring":[0.3,0.2,0.5],"lifetime":{"law":"deterministic","value":1},"horizon":3})");
  cfg.output_dir = subdir(o, "ac3").string();
  run_enumerate(cfg);
  const auto law = enumerate_lattice(d, 3);
  const auto table = build_discrete(d, 3);
  double worst = 0.0;
  json rows = json::array();
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int c = 1; c <= 2; ++c) {
        const std::vector<int> l{a, b, c};
        const auto it = law.uniform.find(l);
        const double e = it == law.uniform.end() ? 0.0 : it->second, f = uniform_lineage_exact(l, table, d);
        worst = std::max(worst, std::abs(e - f));
        rows.push_back({{"sizes", l}, {"enumeration", e}, {"formula", f}});
      }
  const OffspringDistribution crit({0.5, 0.0, 0.5});
  const std::vector<int> l22{2, 2};
  const double hand_enum = enumerate_lattice(crit, 2).uniform.at(l22);
  const double hand_formula = uniform_lineage_exact(l22, build_discrete(crit, 2), crit);
  const double hand_err = std::max(std::abs(hand_enum - 0.375), std::abs(hand_formula - 0.375));
  json j{{"rows", rows}, {"max_abs_diff", worst}, {"hand_check", {{"enumeration", hand_enum}, {"formula", hand_formula}, {"expected", 0.375}}}};
  write_text_file(o.out_dir / "ac3" / "check.json", dump(j));
  return {worst <= 1e-12 && hand_err <= 1e-12,
          "max |enumeration - formula| = " + num(worst) + " over 8 size vectors; 0.375 check error " + num(hand_err)};
}

// AC-4: leftmost law by enumeration against prod p_l q^k, k from 0.
Verdict ac4(const AcceptanceOptions& o) {
  const OffspringDistribution d({0.3, 0.2, 0.5});
  const auto law = enumerate_lattice(d, 3);
  const auto table = build_discrete(d, 3);
  double worst = 0.0, total = law.extinction;
  int positive_k = 0, cases = 0;
  json rows = json::array();
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int c = 1; c <= 2; ++c) {
        const std::vector<int> l{a, b, c};
        for (int k1 = 0; k1 < a; ++k1)
          for (int k2 = 0; k2 < b; ++k2)
            for (int k3 = 0; k3 < c; ++k3) {
              const std::vector<int> k{k1, k2, k3};
              const auto it = law.leftmost.find({l, k});
              const double e = it == law.leftmost.end() ? 0.0 : it->second, f = leftmost_lineage_exact(l, k, table, d);
              worst = std::max(worst, std::abs(e - f));
              total += f;
              ++cases;
              if (k1 + k2 + k3 > 0 && f > 0.0) ++positive_k;
              rows.push_back({{"sizes", l}, {"ks", k}, {"enumeration", e}, {"formula", f}});
            }
      }
  // Every enumerated outcome must be among the cases above.
  std::size_t stray = 0;
  for (const auto& [key, p] : law.leftmost) {
    bool in_range = true;
    for (std::size_t i = 0; i < key.first.size(); ++i) in_range = in_range && key.second[i] < key.first[i];
    stray += !in_range;
  }
  json j{{"rows", rows}, {"max_abs_diff", worst}, {"total_mass", total}, {"outcomes_with_k_positive", positive_k}};
  write_text_file(subdir(o, "ac4") / "check.json", dump(j));
  const bool ok = worst <= 1e-12 && std::abs(total - 1.0) <= 1e-12 && stray == 0 && positive_k > 0;
  return {ok, "max |enumeration - formula| = " + num(worst) + " over " + std::to_string(cases) +
                  " (l, k) cases, K_i in 0..l_i-1; total mass " + num(total)};
}

// AC-5: Palm lineage, time-homogeneous with size-biased reproduction.
Verdict ac5(const AcceptanceOptions& o) {
  auto cfg = parse_config(R"({"offspring":[0.2,0.3,0.5],"lifetime":{"law":"exponential","rate":1},"horizon":3,
    "scheme":"palm","replicates":100000,"slice":{"j":1,"sizes":[2]}})");
  cfg.base_seed = o.seed + 5;
  cfg.output_dir = subdir(o, "ac5").string();
  const auto rep = run_compare(cfg, o.threads);
  return from_report(rep, {"palm_interevent_ks", "palm_event_count", "palm_sizes"});
}

// AC-6: neutrality of size-1 events and the long-horizon limit.
Verdict ac6(const AcceptanceOptions& o) {
  RngStream rng(o.seed + 6, 0);
  json rows = json::array();
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int kmax = 1 + static_cast<int>(rng.uniform() * 4);
    std::vector<double> p(static_cast<std::size_t>(kmax + 1));
    double sum = 0.0;
    for (auto& x : p) sum += (x = -std::log(rng.uniform_pos()));
    for (auto& x : p) x /= sum;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) acc += p[i];
    p.back() = 1.0 - acc;
    const OffspringDistribution d(p);
    const double T = 0.5 + 2.5 * rng.uniform();
    const bool gamma = rep % 2 == 1;
    const auto law = gamma ? LifetimeLaw::gamma(1.0 + 2.0 * rng.uniform(), 0.3 + 0.7 * rng.uniform())
                           : LifetimeLaw::exponential(0.5 + 1.5 * rng.uniform());
    GenFunOptions opts;
    if (gamma) opts.steps = 400;
    const auto table = build_for_law(d, law, T, opts);
    const double t = rng.uniform() * T;
    const double b = rate_bias(table, t, 1);
    worst = std::max(worst, std::abs(b - 1.0));
    rows.push_back({{"offspring", p}, {"lifetime", law.name()}, {"horizon", T}, {"t", t}, {"B", b}});
  }
  const OffspringDistribution crit({0.5, 0.0, 0.5});
  json limit = json::array();
  double prev = INFINITY;
  bool decreasing = true;
  for (double T : {5.0, 10.0, 20.0, 40.0}) {
    const auto table = build_markov(crit, 1.0, T);
    const double b = rate_bias(table, T - 1.0, 2), gap = std::abs(b - 1.0);
    decreasing = decreasing && gap < prev;
    prev = gap;
    limit.push_back({{"T", T}, {"B", b}, {"gap", gap}});
  }
  json j{{"neutral", rows}, {"neutral_max_error", worst}, {"limit", limit}, {"strictly_decreasing", decreasing}};
  write_text_file(subdir(o, "ac6") / "rate_bias.json", dump(j));
  return {worst <= 1e-10 && decreasing,
          "max |B(t,T,1) - 1| = " + num(worst) + " over 20 tables; |B(T-1,T,2) - 1| strictly decreasing: " +
              (decreasing ? "yes" : "no")};
}

int draw(const OffspringDistribution& law, RngStream& rng) { return law.sample(rng); }

double max_marker(int count, RngStream& rng) {
  double m = -INFINITY;
  for (int i = 0; i < count; ++i) m = std::max(m, rng.uniform());
  return m;
}

// AC-7: brute-force checks of the marker identities.
Verdict ac7(const AcceptanceOptions& o) {
  constexpr int kTrials = 1'000'000;
  constexpr std::size_t kBins = 20;
  const OffspringDistribution nt({0.3, 0.4, 0.2, 0.1});
  const auto s_axis = uniform_axis("S", 0.0, 1.0, kBins);
  json out;
  bool ok = true;
  std::ostringstream detail;

  {
    // Max marker over l groups of i.i.d. group sizes.
    const int ell = 3;
    RngStream rng(o.seed + 7, 0);
    JointHistogram obs({s_axis});
    for (int i = 0; i < kTrials; ++i) {
      double s = -INFINITY;
      for (int k = 0; k < ell; ++k) s = std::max(s, max_marker(draw(nt, rng), rng));
      if (s >= 0.0) obs.add(std::span<const double>(&s, 1));
    }
    const auto expected = expected_histogram(
        [&](std::span<const double> x) { return ell * std::pow(nt.pgf(x[0]), ell - 1) * nt.pgf_derivative(x[0]); },
        {s_axis}, 7);
    const double tv = tv_distance(obs, expected), mc = tv_mc_error(expected, obs.total_weight());
    const double mass = obs.total_weight() / kTrials, mass_exp = 1.0 - std::pow(nt.pgf(0.0), ell);
    const double mass_se = std::sqrt(mass_exp * (1 - mass_exp) / kTrials);
    const bool pass = tv <= 3.0 * mc && std::abs(mass - mass_exp) <= 3.0 * mass_se;
    ok = ok && pass;
    out["identity_groups"] = {{"ell", ell}, {"tv", tv}, {"mc_error", mc}, {"mass", mass}, {"mass_expected", mass_exp}, {"pass", pass}};
    detail << "groups TV " << num(tv) << " <= 3x" << num(mc) << (pass ? "" : " FAILED");
  }
  {
    // Same with a random number of groups L ~ p.
    const OffspringDistribution groups({0.1, 0.3, 0.4, 0.2});
    RngStream rng(o.seed + 7, 1);
    const std::vector<Axis> axes{Axis{"l", {0.5, 1.5, 2.5, 3.5}}, s_axis};
    JointHistogram obs(axes);
    for (int i = 0; i < kTrials; ++i) {
      const int ell = draw(groups, rng);
      double s = -INFINITY;
      for (int k = 0; k < ell; ++k) s = std::max(s, max_marker(draw(nt, rng), rng));
      if (s >= 0.0) {
        const double pt[] = {static_cast<double>(ell), s};
        obs.add(pt);
      }
    }
    JointHistogram expected(axes);
    for (int ell = 1; ell <= 3; ++ell) {
      const auto row = expected_histogram(
          [&](std::span<const double> x) {
            return ell * groups.prob(ell) * std::pow(nt.pgf(x[0]), ell - 1) * nt.pgf_derivative(x[0]);
          },
          {s_axis}, 7);
      for (std::size_t b = 0; b < kBins; ++b) expected.add_to_bin(static_cast<std::size_t>(ell - 1) * kBins + b, row.count(b));
    }
    const double tv = tv_distance(obs, expected), mc = tv_mc_error(expected, obs.total_weight());
    const bool pass = tv <= 3.0 * mc;
    ok = ok && pass;
    out["random_groups"] = {{"tv", tv}, {"mc_error", mc}, {"pass", pass}};
    detail << "; random groups TV " << num(tv) << " <= 3x" << num(mc) << (pass ? "" : " FAILED");
  }
  {
    // Skipped extinct groups before the smallest marker with a survivor.
    const int ell = 4;
    RngStream rng(o.seed + 7, 2);
    std::vector<double> counts(static_cast<std::size_t>(ell), 0.0);
    for (int i = 0; i < kTrials; ++i) {
      std::vector<std::pair<double, int>> g(static_cast<std::size_t>(ell));
      for (auto& [u, n] : g) {
        n = draw(nt, rng);
        u = rng.uniform();
      }
      double smin = INFINITY;
      for (const auto& [u, n] : g)
        if (n >= 1) smin = std::min(smin, u);
      if (!std::isfinite(smin)) continue;
      int k = 0;
      for (const auto& [u, n] : g) k += u < smin;
      counts[static_cast<std::size_t>(k)] += 1.0;
    }
    const double q0 = nt.prob(0);
    json rows = json::array();
    bool pass = true;
    for (int k = 0; k < ell; ++k) {
      const double p = std::pow(q0, k) * (1.0 - q0), phat = counts[static_cast<std::size_t>(k)] / kTrials;
      const double se = std::sqrt(p * (1 - p) / kTrials);
      pass = pass && std::abs(phat - p) <= 3.0 * se;
      rows.push_back({{"k", k}, {"observed", phat}, {"expected", p}, {"se", se}});
    }
    ok = ok && pass;
    out["skipped_extinct"] = {{"ell", ell}, {"rows", rows}, {"pass", pass}};
    detail << "; skipped-extinct frequencies within 3 sigma: " << (pass ? "yes" : "no");
  }
  out["trials"] = kTrials;
  write_text_file(subdir(o, "ac7") / "identities.json", dump(out));
  return {ok, detail.str()};
}

struct Criterion {
  const char* id;
  const char* title;
  double limit;
  Verdict (*run)(const AcceptanceOptions&);
};

}  // namespace

std::vector<AcceptanceResult> run_acceptance(const AcceptanceOptions& opts,
                                             const std::function<void(const AcceptanceResult&)>& on_result) {
  static const Criterion criteria[] = {
      {"AC-1", "generating function closed forms", 10.0, ac1},
      {"AC-2", "uniform-marker lineage law vs Monte Carlo", 120.0, ac2},
      {"AC-3", "lattice uniform lineage law, exact", 30.0, ac3},
      {"AC-4", "lattice leftmost lineage law, exact", 30.0, ac4},
      {"AC-5", "Palm lineage: homogeneous size-biased events", 120.0, ac5},
      {"AC-6", "rate bias neutrality and long-horizon limit", 60.0, ac6},
      {"AC-7", "marker identities by brute force", 60.0, ac7},
  };
  ensure_directory(opts.out_dir);
  std::vector<AcceptanceResult> results;
  json summary = json::array();
  for (const auto& c : criteria) {
    AcceptanceResult r;
    r.id = c.id;
    r.title = c.title;
    r.limit_seconds = c.limit;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto v = c.run(opts);
      r.passed = v.passed;
      r.detail = v.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds > r.limit_seconds) {
      r.passed = false;
      r.detail += "; runtime limit exceeded";
    }
    summary.push_back({{"id", r.id}, {"title", r.title}, {"verdict", r.passed ? "PASS" : "FAIL"}, {"detail", r.detail}});
    if (on_result) on_result(r);
    results.push_back(r);
  }
  write_text_file(opts.out_dir / "acceptance.json", dump(json{{"seed", opts.seed}, {"criteria", summary}}));
  return results;
}

std::vector<fs::path> list_artifacts(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  std::sort(out.begin(), out.end());
  return out;
}

std::string compare_artifact_trees(const fs::path& a, const fs::path& b) {
  const auto la = list_artifacts(a), lb = list_artifacts(b);
  if (la != lb) return "artifact lists differ (" + std::to_string(la.size()) + " vs " + std::to_string(lb.size()) + " files)";
  for (const auto& rel : la)
    if (read_text_file(a / rel) != read_text_file(b / rel)) return "contents differ: " + rel.string();
  return {};
}

}  // namespace bhl
