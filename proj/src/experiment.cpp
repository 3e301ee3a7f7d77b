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

#include "bhl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "bhl/enumerate.hpp"
#include "bhl/errors.hpp"
#include "bhl/io.hpp"
#include "bhl/simulator.hpp"
#include "bhl/stats.hpp"
#include "bhl/theory.hpp"
#include "json.hpp"

namespace bhl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kAlpha = 0.001;
constexpr std::uint64_t kMinSurvivors = 1000;
constexpr double kMaxOverflowFraction = 1e-4;
// Thinning draws use their own streams, disjoint from the tree streams.
constexpr std::uint64_t kThinningSeedOffset = 0x9E3779B97F4A7C15ULL;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

bool is_lattice(const LifetimeLaw& law, double horizon) {
  if (!law.is_deterministic()) return false;
  return std::get<DeterministicLifetime>(law.variant()).value == 1.0 && horizon >= 1.0 &&
         std::abs(horizon - std::round(horizon)) <= 1e-12;
}

json lifetime_json(const LifetimeConfig& l) {
  json j{{"law", l.law}};
  if (l.law == "exponential") j["rate"] = l.rate;
  if (l.law == "deterministic") j["value"] = l.value;
  if (l.law == "gamma") {
    j["shape"] = l.shape;
    j["scale"] = l.scale;
  }
  return j;
}

json config_json(const ExperimentConfig& c) {
  return json{{"offspring", c.offspring},
              {"lifetime", lifetime_json(c.lifetime)},
              {"horizon", c.horizon},
              {"scheme", scheme_name(c.scheme)},
              {"replicates", c.replicates},
              {"base_seed", c.base_seed},
              {"max_nodes", c.max_nodes},
              {"genfun", {{"solver", c.solver}, {"steps", c.steps}, {"s_points", c.s_points}}},
              {"histogram",
               {{"t_bins", c.histogram.t_bins},
                {"s_bins", c.histogram.s_bins},
                {"quadrature_order", c.histogram.quadrature_order}}},
              {"slice", {{"j", c.slice.j}, {"sizes", c.slice.sizes}, {"ks", c.slice.ks}}},
              {"predict", {{"t", c.predict.t}, {"ell", c.predict.ell}, {"s", c.predict.s}}},
              {"output_dir", c.output_dir},
              {"strict_numerics", c.strict_numerics},
              {"trace_trees", c.trace_trees}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> time_axes(int j) {
  std::vector<std::string> names;
  for (int i = 1; i <= j; ++i) names.push_back("t" + std::to_string(i));
  return names;
}

bool ordered(std::span<const double> t) { return std::is_sorted(t.begin(), t.end()); }

std::string bin_label(const JointHistogram& h, std::size_t flat) {
  const auto bounds = h.bin_bounds(flat);
  std::string out;
  for (std::size_t a = 0; a < bounds.size(); ++a) {
    if (a) out += ';';
    out += h.axes()[a].name + "=[" + format_double(bounds[a].first) + "," + format_double(bounds[a].second) + ")";
  }
  return out;
}

std::string sizes_label(const std::vector<int>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + ")";
}

// Collects bins.csv rows across tests.
struct BinsWriter {
  std::ostringstream out;
  BinsWriter() { out << "test,bin,label,observed,expected,mc_error,quad_error\n"; }
  void row(const std::string& test, std::size_t bin, const std::string& label, double observed, double expected,
           double mc, double quad) {
    out << test << ',' << bin << ",\"" << label << "\"," << format_double(observed) << ','
        << format_double(expected) << ',' << format_double(mc) << ',' << format_double(quad) << '\n';
  }
};

// Chi-square that tolerates a single populated category (nothing to test).
ChiSquareResult safe_chi_square(std::span<const double> obs, std::span<const double> expected) {
  std::size_t positive = 0;
  for (double e : expected) positive += e > 0.0;
  if (positive < 2) {
    bool clean = true;
    for (std::size_t i = 0; i < obs.size(); ++i) clean = clean && (expected[i] > 0.0 || obs[i] == 0.0);
    ChiSquareResult r;
    r.p_value = clean ? 1.0 : 0.0;
    r.pooled_bins = positive;
    return r;
  }
  return chi_square_test(obs, expected);
}

// Observed weights against bin-integrated probabilities over n trials. Every
// bin must sit within 4x (MC + quadrature) error and the chi-square with the
// complement cell appended must have p >= 0.001.
TestOutcome histogram_test(const std::string& name, const JointHistogram& observed, double n,
                           const JointHistogram& expected, const JointHistogram& refined, BinsWriter& bins) {
  TestOutcome t;
  t.test = name;
  t.n_trials = static_cast<std::uint64_t>(n);
  t.bins = observed.size();
  std::vector<double> obs, exp;
  std::size_t failed = 0;
  double worst = 0.0;
  for (std::size_t b = 0; b < observed.size(); ++b) {
    const double p = expected.count(b), phat = observed.count(b) / n;
    const double mc = std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
    const double quad = std::abs(p - refined.count(b));
    const double err = std::abs(phat - p), tol = 4.0 * (mc + quad);
    if (err > tol) ++failed;
    if (tol > 0.0) worst = std::max(worst, err / (mc + quad));
    else if (err > 0.0) worst = INFINITY;
    bins.row(name, b, bin_label(observed, b), phat, p, mc, quad);
    obs.push_back(observed.count(b));
    exp.push_back(p * n);
  }
  obs.push_back(n - observed.total_weight());
  exp.push_back(std::max(0.0, n * (1.0 - expected.total_weight())));
  const auto chi = safe_chi_square(obs, exp);
  t.statistic = chi.statistic;
  t.dof = chi.dof;
  t.p_value = chi.p_value;
  t.tv = observed.total_weight() > 0.0 ? tv_distance(observed, expected) : 1.0;
  t.passed = failed == 0 && chi.p_value >= kAlpha && observed.out_of_range() == 0;
  std::ostringstream d;
  d << "bins outside 4x(MC+quadrature): " << failed << "; max error ratio " << format_double(worst)
    << "; out of range " << observed.out_of_range();
  t.detail = d.str();
  return t;
}

// Categorical chi-square plus TV of empirical vs exact frequencies.
TestOutcome categorical_test(const std::string& name, const std::vector<std::string>& labels,
                             const std::vector<double>& observed, const std::vector<double>& probs, double n,
                             BinsWriter& bins) {
  TestOutcome t;
  t.test = name;
  t.n_trials = static_cast<std::uint64_t>(n);
  t.bins = labels.size();
  std::vector<double> exp;
  double tv = 0.0, mc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probs[i], phat = observed[i] / n, se = std::sqrt(std::max(p * (1 - p), 0.0) / n);
    bins.row(name, i, labels[i], phat, p, se, 0.0);
    exp.push_back(p * n);
    tv += 0.5 * std::abs(phat - p);
    mc += 0.5 * se;
  }
  const auto chi = safe_chi_square(observed, exp);
  t.statistic = chi.statistic;
  t.dof = chi.dof;
  t.p_value = chi.p_value;
  t.tv = tv;
  t.passed = chi.p_value >= kAlpha;
  t.detail = "TV MC scale " + format_double(mc);
  return t;
}

std::vector<Axis> slice_axes(const ExperimentConfig& cfg, bool with_s) {
  std::vector<Axis> axes;
  for (const auto& name : time_axes(cfg.slice.j))
    axes.push_back(uniform_axis(name, 0.0, cfg.horizon, static_cast<std::size_t>(cfg.histogram.t_bins)));
  if (with_s) axes.push_back(uniform_axis("S", 0.0, 1.0, static_cast<std::size_t>(cfg.histogram.s_bins)));
  return axes;
}

std::pair<JointHistogram, JointHistogram> expected_pair(const DensityFn& f, const std::vector<Axis>& axes, int order) {
  return {expected_histogram(f, axes, order), expected_histogram(f, axes, 2 * order + 1)};
}

std::vector<LineageRecord> flatten(const SimulationResult& sim) {
  std::vector<LineageRecord> out;
  for (const auto& r : sim.replicates)
    for (const auto& rec : r.records) out.push_back(rec);
  return out;
}

// One Palm lineage per accepted tree: tree i is kept with probability
// N_i / max N and one of its alive individuals is picked uniformly, which
// gives i.i.d. draws from the Palm law.
std::vector<LineageRecord> thin_palm(const ExperimentConfig& cfg, const SimulationResult& sim) {
  std::vector<LineageRecord> out;
  const double cap = static_cast<double>(std::max<std::uint64_t>(sim.max_population, 1));
  for (std::size_t i = 0; i < sim.replicates.size(); ++i) {
    const auto& recs = sim.replicates[i].records;
    if (recs.empty()) continue;
    RngStream rng(cfg.base_seed + kThinningSeedOffset, i);
    if (rng.uniform() * cap >= static_cast<double>(recs.size())) continue;
    const auto pick = std::min(recs.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(recs.size())));
    out.push_back(recs[pick]);
  }
  return out;
}

// Ratio estimator sum(a_i) / sum(b_i) with a cluster-robust standard error.
std::pair<double, double> ratio_estimate(const std::vector<double>& a, const std::vector<double>& b) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  if (!(sb > 0.0)) return {0.0, INFINITY};
  const double r = sa / sb;
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) v += (a[i] - r * b[i]) * (a[i] - r * b[i]);
  return {r, std::sqrt(v) / sb};
}

void compare_uniform(const ExperimentConfig& cfg, const SimulationResult& sim, const GenFunTable& table,
                     CompareReport& report, BinsWriter& bins) {
  const auto d = cfg.offspring_distribution();
  const RenewalLaw rl{cfg.lifetime.make()};
  const auto records = flatten(sim);
  const double n = static_cast<double>(sim.n_trials);
  const double T = cfg.horizon;
  const auto sizes = cfg.slice.sizes;

  const auto axes = slice_axes(cfg, true);
  RecordFilter f;
  f.events = static_cast<std::size_t>(cfg.slice.j);
  f.sizes = sizes;
  const auto observed = bin_records(records, axes, f, sim.n_trials);
  const DensityFn dens = [&](std::span<const double> x) {
    const auto times = x.first(x.size() - 1);
    if (!ordered(times)) return 0.0;
    return uniform_lineage_density(UniformLineageQuery{{times.begin(), times.end()}, sizes, x.back(), T}, table, d, rl);
  };
  const auto [expected, refined] = expected_pair(dens, axes, cfg.histogram.quadrature_order);
  report.tests.push_back(histogram_test("uniform_slice", observed, n, expected, refined, bins));

  // Marker density among survivors.
  const std::vector<Axis> s_axis{uniform_axis("S", 0.0, 1.0, static_cast<std::size_t>(cfg.histogram.s_bins))};
  const auto s_obs = bin_records(records, s_axis, RecordFilter{}, sim.n_trials);
  const auto s_exp = expected_histogram([&](std::span<const double> x) { return s_density(table, x[0]); }, s_axis,
                                        cfg.histogram.quadrature_order);
  const double survivors = static_cast<double>(sim.survivors);
  TestOutcome t;
  t.test = "s_density";
  t.n_trials = sim.survivors;
  t.bins = s_obs.size();
  t.tv = tv_distance(s_obs, s_exp);
  const double scale = tv_mc_error(s_exp, survivors);
  const auto chi = chi_square_test(s_obs, s_exp);
  t.statistic = chi.statistic;
  t.dof = chi.dof;
  t.p_value = chi.p_value;
  t.passed = t.tv <= 3.0 * scale;
  t.detail = "TV threshold 3x MC error = " + format_double(3.0 * scale);
  for (std::size_t b = 0; b < s_obs.size(); ++b) {
    const double p = s_exp.count(b);
    bins.row(t.test, b, bin_label(s_obs, b), s_obs.count(b) / survivors, p,
             std::sqrt(std::max(p * (1 - p), 0.0) / survivors), 0.0);
  }
  report.tests.push_back(t);
}

void compare_palm(const ExperimentConfig& cfg, const SimulationResult& sim, const GenFunTable& table,
                  CompareReport& report, BinsWriter& bins) {
  const auto d = cfg.offspring_distribution();
  const auto law = cfg.lifetime.make();
  const RenewalLaw rl{law};
  const double T = cfg.horizon, m = d.mean();
  const int kmax = d.max_offspring();

  // Cluster-robust pooled estimates over all trees.
  std::vector<double> pop, events;
  std::vector<std::vector<double>> by_size(static_cast<std::size_t>(kmax + 1));
  for (const auto& r : sim.replicates) {
    if (r.overflow) continue;
    double ev = 0.0;
    std::vector<double> counts(static_cast<std::size_t>(kmax + 1), 0.0);
    for (const auto& rec : r.records) {
      ev += static_cast<double>(rec.events());
      for (int l : rec.sizes) counts[static_cast<std::size_t>(l)] += 1.0;
    }
    pop.push_back(static_cast<double>(r.records.size()));
    events.push_back(ev);
    for (int l = 0; l <= kmax; ++l) by_size[static_cast<std::size_t>(l)].push_back(counts[static_cast<std::size_t>(l)]);
  }

  const auto thinned = thin_palm(cfg, sim);
  const double n_thin = static_cast<double>(thinned.size());

  if (law.is_exponential()) {
    const double r = law.rate();
    const auto [mean_j, se] = ratio_estimate(events, pop);
    TestOutcome t;
    t.test = "palm_event_count";
    t.n_trials = sim.n_trials;
    t.bins = 1;
    t.statistic = (mean_j - r * m * T) / se;
    t.p_value = std::erfc(std::abs(t.statistic) / std::sqrt(2.0));
    t.passed = std::abs(t.statistic) <= 3.0;
    t.detail = "mean events " + format_double(mean_j) + " vs " + format_double(r * m * T) + " (se " +
               format_double(se) + ")";
    bins.row(t.test, 0, "J", mean_j, r * m * T, se, 0.0);
    report.tests.push_back(t);
  }

  {
    TestOutcome t;
    t.test = "palm_sizes";
    t.n_trials = sim.n_trials;
    std::size_t outside = 0;
    std::vector<double> obs, exp;
    double thin_events = 0.0;
    for (const auto& rec : thinned) thin_events += static_cast<double>(rec.events());
    for (int l = 1; l <= kmax; ++l) {
      const double p = l * d.prob(l) / m;
      const auto [freq, se] = ratio_estimate(by_size[static_cast<std::size_t>(l)], events);
      if (std::abs(freq - p) > 3.0 * se && !(freq == p)) ++outside;
      bins.row(t.test, static_cast<std::size_t>(l - 1), "l=" + std::to_string(l), freq, p, se, 0.0);
      double c = 0.0;
      for (const auto& rec : thinned)
        for (int x : rec.sizes) c += x == l;
      obs.push_back(c);
      exp.push_back(p * thin_events);
      t.tv += 0.5 * std::abs(freq - p);
    }
    t.bins = static_cast<std::size_t>(kmax);
    const auto chi = thin_events > 0.0 ? safe_chi_square(obs, exp) : ChiSquareResult{0.0, 0, 0.0, 0};
    t.statistic = chi.statistic;
    t.dof = chi.dof;
    t.p_value = chi.p_value;
    t.passed = outside == 0 && chi.p_value >= kAlpha;
    t.detail = "sizes outside 3 sigma: " + std::to_string(outside) + "; chi-square on " +
               format_double(thin_events) + " events of " + format_double(n_thin) + " thinned lineages";
    report.tests.push_back(t);
  }

  if (law.is_exponential()) {
    // Windows [0,T] of independent lineages laid end to end form one
    // Poisson stream; the trailing censored gap is dropped.
    std::vector<double> gaps;
    double offset = 0.0, last = 0.0;
    for (const auto& rec : thinned) {
      for (double t : rec.times) {
        gaps.push_back(offset + t - last);
        last = offset + t;
      }
      offset += T;
    }
    const double rate = law.rate() * m;
    TestOutcome t;
    t.test = "palm_interevent_ks";
    t.n_trials = static_cast<std::uint64_t>(n_thin);
    t.bins = gaps.size();
    if (gaps.size() >= 10) {
      const auto ks = ks_test(gaps, [rate](double x) { return x > 0.0 ? -std::expm1(-rate * x) : 0.0; });
      t.statistic = ks.statistic;
      t.p_value = ks.p_value;
    } else {
      t.p_value = 0.0;
    }
    t.passed = t.p_value >= kAlpha;
    t.detail = "KS vs Exp(" + format_double(rate) + ") over " + std::to_string(gaps.size()) + " gaps";
    report.tests.push_back(t);
  }

  const auto axes = slice_axes(cfg, false);
  RecordFilter f;
  f.events = static_cast<std::size_t>(cfg.slice.j);
  f.sizes = cfg.slice.sizes;
  const auto observed = bin_records(thinned, axes, f, static_cast<std::uint64_t>(n_thin));
  const DensityFn dens = [&](std::span<const double> x) {
    return ordered(x) ? palm_lineage_density(x, cfg.slice.sizes, d, rl, table) : 0.0;
  };
  const auto [expected, refined] = expected_pair(dens, axes, cfg.histogram.quadrature_order);
  if (n_thin > 0.0) report.tests.push_back(histogram_test("palm_slice", observed, n_thin, expected, refined, bins));
}

void compare_leftmost(const ExperimentConfig& cfg, const SimulationResult& sim, const GenFunTable& table,
                      CompareReport& report, BinsWriter& bins) {
  const auto d = cfg.offspring_distribution();
  const RenewalLaw rl{cfg.lifetime.make()};
  const auto records = flatten(sim);
  const auto axes = slice_axes(cfg, false);
  RecordFilter f;
  f.events = static_cast<std::size_t>(cfg.slice.j);
  f.sizes = cfg.slice.sizes;
  f.ks = cfg.slice.ks;
  const auto observed = bin_records(records, axes, f, sim.n_trials);
  const DensityFn dens = [&](std::span<const double> x) {
    return ordered(x) ? leftmost_lineage_density(x, cfg.slice.sizes, cfg.slice.ks, d, rl, table) : 0.0;
  };
  const auto [expected, refined] = expected_pair(dens, axes, cfg.histogram.quadrature_order);
  report.tests.push_back(
      histogram_test("leftmost_slice", observed, static_cast<double>(sim.n_trials), expected, refined, bins));
}

void compare_lattice(const ExperimentConfig& cfg, const SimulationResult& sim, CompareReport& report,
                     BinsWriter& bins) {
  const auto d = cfg.offspring_distribution();
  const int n_gen = static_cast<int>(std::round(cfg.horizon));
  const auto law = enumerate_lattice(d, n_gen);
  std::vector<std::string> labels;
  std::vector<double> obs, probs;
  double n = static_cast<double>(sim.n_trials);

  if (cfg.scheme == Scheme::Palm) {
    const auto thinned = thin_palm(cfg, sim);
    n = static_cast<double>(thinned.size());
    std::map<std::vector<int>, double> counts;
    for (const auto& rec : thinned) counts[rec.sizes] += 1.0;
    for (const auto& [sizes, w] : law.palm) {
      labels.push_back(sizes_label(sizes));
      probs.push_back(w / law.mean_population);
      obs.push_back(counts[sizes]);
    }
    report.tests.push_back(categorical_test("enumeration_palm", labels, obs, probs, n, bins));
    return;
  }

  double extinct = 0.0;
  if (cfg.scheme == Scheme::UniformMarker) {
    std::map<std::vector<int>, double> counts;
    for (const auto& r : sim.replicates) {
      if (r.overflow) continue;
      if (r.records.empty() || !r.records[0].survived) extinct += 1.0;
      else counts[r.records[0].sizes] += 1.0;
    }
    for (const auto& [sizes, p] : law.uniform) {
      labels.push_back(sizes_label(sizes));
      probs.push_back(p);
      obs.push_back(counts[sizes]);
    }
  } else {
    std::map<std::pair<std::vector<int>, std::vector<int>>, double> counts;
    for (const auto& r : sim.replicates) {
      if (r.overflow) continue;
      if (r.records.empty() || !r.records[0].survived) extinct += 1.0;
      else counts[{r.records[0].sizes, r.records[0].left_extinct}] += 1.0;
    }
    for (const auto& [key, p] : law.leftmost) {
      labels.push_back(sizes_label(key.first) + "|k" + sizes_label(key.second));
      probs.push_back(p);
      obs.push_back(counts[key]);
    }
  }
  labels.push_back("extinct");
  probs.push_back(law.extinction);
  obs.push_back(extinct);
  report.tests.push_back(categorical_test(
      cfg.scheme == Scheme::UniformMarker ? "enumeration_uniform" : "enumeration_leftmost", labels, obs, probs, n,
      bins));
}

json outcome_json(const TestOutcome& t) {
  return json{{"test", t.test},       {"statistic", t.statistic}, {"dof", t.dof},
              {"p_value", t.p_value}, {"tv", t.tv},               {"n_trials", t.n_trials},
              {"bins", t.bins},       {"verdict", t.passed ? "PASS" : "FAIL"}, {"detail", t.detail}};
}

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  ensure_directory(dir);
  return dir;
}

}  // namespace

LifetimeLaw LifetimeConfig::make() const {
  if (law == "exponential") return LifetimeLaw::exponential(rate);
  if (law == "deterministic") return LifetimeLaw::deterministic(value);
  if (law == "gamma") return LifetimeLaw::gamma(shape, scale);
  throw ConfigError("lifetime.law must be exponential, deterministic or gamma, got '" + law + "'");
}

GenFunOptions ExperimentConfig::genfun_options() const {
  GenFunOptions o;
  o.steps = steps;
  o.s_points = s_points;
  o.strict = strict_numerics;
  return o;
}

void validate_config(const ExperimentConfig& c) {
  const auto d = c.offspring_distribution();
  const auto law = c.lifetime.make();
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) throw ConfigError("horizon must be > 0");
  if (c.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (c.max_nodes < 1) throw ConfigError("max_nodes must be >= 1");
  if (c.solver != "auto" && c.solver != "markov" && c.solver != "volterra" && c.solver != "discrete")
    throw ConfigError("genfun.solver must be auto, markov, volterra or discrete");
  if (c.solver == "markov" && !law.is_exponential()) throw ConfigError("genfun.solver markov needs exponential lifetimes");
  if (c.solver == "volterra" && !law.is_continuous()) throw ConfigError("genfun.solver volterra needs a continuous law");
  if (c.solver == "discrete" && !is_lattice(law, c.horizon))
    throw ConfigError("genfun.solver discrete needs deterministic lifetime 1 and an integer horizon");
  if (c.steps < 1 || c.s_points < 2) throw ConfigError("genfun.steps and genfun.s_points must be positive");
  if (c.histogram.t_bins < 1 || c.histogram.s_bins < 1) throw ConfigError("histogram bins must be >= 1");
  if (c.histogram.quadrature_order < 3 || c.histogram.quadrature_order % 2 == 0)
    throw ConfigError("histogram.quadrature_order must be odd and >= 3");
  if (c.slice.j < 1) throw ConfigError("slice.j must be >= 1");
  if (c.slice.sizes.size() != static_cast<std::size_t>(c.slice.j)) throw ConfigError("slice.sizes must have j entries");
  for (int l : c.slice.sizes)
    if (l < 1) throw ConfigError("slice.sizes entries must be >= 1");
  if (!c.slice.ks.empty()) {
    if (c.slice.ks.size() != c.slice.sizes.size()) throw ConfigError("slice.ks must have j entries");
    for (std::size_t i = 0; i < c.slice.ks.size(); ++i)
      if (c.slice.ks[i] < 0 || c.slice.ks[i] >= c.slice.sizes[i])
        throw ConfigError("slice.ks entries must satisfy 0 <= k_i < l_i");
  }
  for (double t : c.predict.t)
    if (!(t >= 0.0 && t <= c.horizon)) throw ConfigError("predict.t entries must lie in [0, horizon]");
  for (int l : c.predict.ell)
    if (l < 1) throw ConfigError("predict.ell entries must be >= 1");
  for (double s : c.predict.s)
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("predict.s entries must lie in [0, 1]");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"offspring", "lifetime", "horizon", "scheme", "replicates", "base_seed", "max_nodes", "genfun",
              "histogram", "slice", "predict", "output_dir", "strict_numerics", "trace_trees"},
             "config");
  ExperimentConfig c;
  read(j, "offspring", c.offspring, "config");
  if (j.contains("lifetime")) {
    const auto& l = j["lifetime"];
    read(l, "law", c.lifetime.law, "lifetime");
    std::set<std::string> allowed{"law"};
    if (c.lifetime.law == "exponential") allowed.insert("rate");
    if (c.lifetime.law == "deterministic") allowed.insert("value");
    if (c.lifetime.law == "gamma") allowed.insert({"shape", "scale"});
    check_keys(l, allowed, "lifetime");
    read(l, "rate", c.lifetime.rate, "lifetime");
    read(l, "value", c.lifetime.value, "lifetime");
    read(l, "shape", c.lifetime.shape, "lifetime");
    read(l, "scale", c.lifetime.scale, "lifetime");
  }
  read(j, "horizon", c.horizon, "config");
  if (j.contains("scheme")) {
    std::string s;
    read(j, "scheme", s, "config");
    c.scheme = parse_scheme(s);
  }
  read(j, "replicates", c.replicates, "config");
  read(j, "base_seed", c.base_seed, "config");
  read(j, "max_nodes", c.max_nodes, "config");
  if (j.contains("genfun")) {
    const auto& g = j["genfun"];
    check_keys(g, {"solver", "steps", "s_points"}, "genfun");
    read(g, "solver", c.solver, "genfun");
    read(g, "steps", c.steps, "genfun");
    read(g, "s_points", c.s_points, "genfun");
  }
  if (j.contains("histogram")) {
    const auto& h = j["histogram"];
    check_keys(h, {"t_bins", "s_bins", "quadrature_order"}, "histogram");
    read(h, "t_bins", c.histogram.t_bins, "histogram");
    read(h, "s_bins", c.histogram.s_bins, "histogram");
    read(h, "quadrature_order", c.histogram.quadrature_order, "histogram");
  }
  if (j.contains("slice")) {
    const auto& s = j["slice"];
    check_keys(s, {"j", "sizes", "ks"}, "slice");
    read(s, "j", c.slice.j, "slice");
    if (!s.contains("sizes")) c.slice.sizes.assign(static_cast<std::size_t>(std::max(c.slice.j, 0)), 2);
    read(s, "sizes", c.slice.sizes, "slice");
    read(s, "ks", c.slice.ks, "slice");
  }
  if (j.contains("predict")) {
    const auto& p = j["predict"];
    check_keys(p, {"t", "ell", "s"}, "predict");
    read(p, "t", c.predict.t, "predict");
    read(p, "ell", c.predict.ell, "predict");
    read(p, "s", c.predict.s, "predict");
  }
  read(j, "output_dir", c.output_dir, "config");
  read(j, "strict_numerics", c.strict_numerics, "config");
  read(j, "trace_trees", c.trace_trees, "config");

  // Explicit defaults for the grids.
  const auto d = c.offspring_distribution();
  if (c.slice.ks.empty() && c.scheme == Scheme::Leftmost)
    c.slice.ks.assign(static_cast<std::size_t>(std::max(c.slice.j, 0)), 0);
  if (c.predict.t.empty())
    for (int i = 0; i <= 10; ++i) c.predict.t.push_back(i == 10 ? c.horizon : c.horizon * i / 10.0);
  if (c.predict.ell.empty())
    for (int l = 1; l <= std::max(1, d.max_offspring()); ++l) c.predict.ell.push_back(l);
  if (c.predict.s.empty())
    for (int i = 0; i <= 20; ++i) c.predict.s.push_back(i / 20.0);
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(read_text_file(path)); }

std::string config_to_json(const ExperimentConfig& cfg) { return dump(config_json(cfg)); }

GenFunTable build_table(const ExperimentConfig& cfg) {
  const auto d = cfg.offspring_distribution();
  const auto law = cfg.lifetime.make();
  const auto opts = cfg.genfun_options();
  if (cfg.solver == "markov") return build_markov(d, law.rate(), cfg.horizon, opts);
  if (cfg.solver == "volterra") return build_volterra(d, law, cfg.horizon, opts);
  if (cfg.solver == "discrete") return build_discrete(d, static_cast<int>(std::round(cfg.horizon)), opts);
  return build_for_law(d, law, cfg.horizon, opts);
}

SimulationResult simulate(const ExperimentConfig& cfg, int threads) {
  const auto d = cfg.offspring_distribution();
  const auto law = cfg.lifetime.make();
  SimulationResult sim;
  sim.replicates.resize(cfg.replicates);
  fs::path trace_dir;
  if (cfg.trace_trees > 0) {
    trace_dir = output_dir(cfg) / "traces";
    ensure_directory(trace_dir);
  }
  parallel_for(cfg.replicates, threads, [&](std::size_t i) {
    auto& out = sim.replicates[i];
    RngStream rng(cfg.base_seed, i);
    std::optional<Tree> tree;
    try {
      tree.emplace(simulate_tree(d, law, cfg.horizon, rng, cfg.max_nodes));
    } catch (const PopulationCapExceeded&) {
      out.overflow = true;
      return;
    }
    out.population = tree->population();
    if (i < cfg.trace_trees) {
      std::ostringstream os;
      write_trace_csv(os, *tree);
      write_text_file(trace_dir / ("tree_" + std::to_string(i) + ".csv"), os.str());
    }
    switch (cfg.scheme) {
      case Scheme::UniformMarker:
        out.records.push_back(sample_uniform_marker(*tree, rng));
        break;
      case Scheme::Palm:
        out.records = sample_palm(*tree);
        break;
      case Scheme::Leftmost:
        out.records.push_back(sample_leftmost(*tree));
        break;
    }
  });
  for (const auto& r : sim.replicates) {
    if (r.overflow) {
      ++sim.overflow;
      continue;
    }
    ++sim.n_trials;
    sim.survivors += r.population > 0;
    sim.population_sum += static_cast<double>(r.population);
    sim.population_sq_sum += static_cast<double>(r.population) * static_cast<double>(r.population);
    sim.max_population = std::max(sim.max_population, r.population);
  }
  const double frac = static_cast<double>(sim.overflow) / static_cast<double>(cfg.replicates);
  if (frac > kMaxOverflowFraction) {
    std::ostringstream os;
    os << "simulate: " << sim.overflow << " of " << cfg.replicates << " trees exceeded max_nodes = " << cfg.max_nodes
       << " (fraction " << frac << " > 1e-4)";
    throw CapacityError(os.str());
  }
  return sim;
}

fs::path run_genfun(const ExperimentConfig& cfg) {
  const auto table = build_table(cfg);
  std::string out = "t,s,F,dFds\n";
  for (std::size_t i = 0; i < table.t_size(); ++i)
    for (std::size_t j = 0; j < table.s_size(); ++j) {
      out += format_double(table.t_grid()[i]);
      out += ',';
      out += format_double(table.s_grid()[j]);
      out += ',';
      out += format_double(table.value(i, j));
      out += ',';
      out += format_double(table.deriv(i, j));
      out += '\n';
    }
  const auto path = output_dir(cfg) / "genfun.csv";
  write_text_file(path, out);
  return path;
}

fs::path run_simulate(const ExperimentConfig& cfg, int threads) {
  const auto sim = simulate(cfg, threads);
  std::string out = "scheme,replicate,survived,J,weight,S,times,sizes,ks\n";
  std::uint64_t n_records = 0;
  for (std::size_t i = 0; i < sim.replicates.size(); ++i)
    for (const auto& rec : sim.replicates[i].records) {
      if (!rec.survived) continue;
      ++n_records;
      out += scheme_name(rec.scheme) + ',' + std::to_string(i) + ",1," + std::to_string(rec.events()) + ',' +
             format_double(rec.weight) + ',' + (rec.marker ? format_double(*rec.marker) : std::string()) + ',' +
             join_semicolon(rec.times, [](double t) { return format_double(t); }) + ',' +
             join_semicolon(rec.sizes, [](int l) { return std::to_string(l); }) + ',' +
             join_semicolon(rec.left_extinct, [](int k) { return std::to_string(k); }) + '\n';
    }
  const auto dir = output_dir(cfg);
  write_text_file(dir / "lineages.csv", out);

  const double n = static_cast<double>(sim.n_trials);
  const double surv = n > 0 ? static_cast<double>(sim.survivors) / n : 0.0;
  const double mean = n > 0 ? sim.population_sum / n : 0.0;
  const double var = n > 1 ? (sim.population_sq_sum / n - mean * mean) * n / (n - 1) : 0.0;
  json summary{{"config", config_json(cfg)},
               {"replicates", cfg.replicates},
               {"n_trials", sim.n_trials},
               {"overflow", sim.overflow},
               {"overflow_fraction", static_cast<double>(sim.overflow) / static_cast<double>(cfg.replicates)},
               {"survivors", sim.survivors},
               {"survival_fraction", surv},
               {"survival_se", n > 0 ? std::sqrt(surv * (1 - surv) / n) : 0.0},
               {"mean_population", mean},
               {"mean_population_se", n > 0 ? std::sqrt(std::max(var, 0.0) / n) : 0.0},
               {"max_population", sim.max_population},
               {"records", n_records}};
  write_text_file(dir / "summary.json", dump(summary));
  return dir / "lineages.csv";
}

fs::path run_predict(const ExperimentConfig& cfg) {
  const auto table = build_table(cfg);
  const auto d = cfg.offspring_distribution();
  const auto law = cfg.lifetime.make();
  std::string out = "t,ell,B,rate,s,s_density\n";
  for (double t : cfg.predict.t)
    for (int l : cfg.predict.ell) {
      const double b = rate_bias(table, t, l);
      out += format_double(t) + ',' + std::to_string(l) + ',' + format_double(b) + ',' +
             (law.is_exponential() ? format_double(ancestral_rate(table, d, law.rate(), t, l)) : std::string()) +
             ",,\n";
    }
  for (double s : cfg.predict.s) out += ",,,," + format_double(s) + ',' + format_double(s_density(table, s)) + '\n';
  const auto path = output_dir(cfg) / "predict.csv";
  write_text_file(path, out);
  return path;
}

bool CompareReport::passed() const {
  return !tests.empty() && std::all_of(tests.begin(), tests.end(), [](const TestOutcome& t) { return t.passed; });
}

const TestOutcome* CompareReport::find(const std::string& name) const {
  for (const auto& t : tests)
    if (t.test == name) return &t;
  return nullptr;
}

CompareReport run_compare(const ExperimentConfig& cfg, int threads) {
  const auto law = cfg.lifetime.make();
  const bool lattice = is_lattice(law, cfg.horizon);
  if (!law.is_continuous() && !lattice)
    throw ConfigError("compare: deterministic lifetimes need value 1 and an integer horizon");
  std::optional<GenFunTable> table;
  if (!lattice) table.emplace(build_table(cfg));

  const auto sim = simulate(cfg, threads);
  if (sim.survivors < kMinSurvivors) {
    std::ostringstream os;
    os << "compare: only " << sim.survivors << " surviving trees, at least " << kMinSurvivors << " are needed";
    throw ConfigError(os.str());
  }
  CompareReport report;
  BinsWriter bins;
  if (lattice) compare_lattice(cfg, sim, report, bins);
  else if (cfg.scheme == Scheme::UniformMarker) compare_uniform(cfg, sim, *table, report, bins);
  else if (cfg.scheme == Scheme::Palm) compare_palm(cfg, sim, *table, report, bins);
  else compare_leftmost(cfg, sim, *table, report, bins);

  json tests = json::array();
  for (const auto& t : report.tests) tests.push_back(outcome_json(t));
  json j{{"config", config_json(cfg)},
         {"n_trials", sim.n_trials},
         {"survivors", sim.survivors},
         {"overflow", sim.overflow},
         {"tests", tests},
         {"verdict", report.passed() ? "PASS" : "FAIL"}};
  const auto dir = output_dir(cfg);
  write_text_file(dir / "report.json", dump(j));
  write_text_file(dir / "bins.csv", bins.out.str());
  return report;
}

fs::path run_enumerate(const ExperimentConfig& cfg) {
  const auto law = cfg.lifetime.make();
  if (!is_lattice(law, cfg.horizon))
    throw ConfigError("enumerate: needs deterministic lifetime 1 and an integer horizon");
  const auto d = cfg.offspring_distribution();
  const int n = static_cast<int>(std::round(cfg.horizon));
  const auto exact = enumerate_lattice(d, n);
  const auto table = build_discrete(d, n, cfg.genfun_options());

  json uniform = json::array(), leftmost = json::array(), palm = json::array();
  double total_uniform = exact.extinction, total_leftmost = exact.extinction;
  for (const auto& [sizes, p] : exact.uniform) {
    uniform.push_back({{"sizes", sizes}, {"probability", p}, {"formula", uniform_lineage_exact(sizes, table, d)}});
    total_uniform += p;
  }
  for (const auto& [key, p] : exact.leftmost) {
    leftmost.push_back({{"sizes", key.first},
                        {"ks", key.second},
                        {"probability", p},
                        {"formula", leftmost_lineage_exact(key.first, key.second, table, d)}});
    total_leftmost += p;
  }
  for (const auto& [sizes, w] : exact.palm)
    palm.push_back({{"sizes", sizes},
                    {"weight", w},
                    {"probability", w / exact.mean_population},
                    {"formula", palm_lineage_exact(sizes, d)}});
  json j{{"config", config_json(cfg)},
         {"generations", n},
         {"genealogies", exact.genealogies},
         {"extinction", exact.extinction},
         {"mean_population", exact.mean_population},
         {"uniform", uniform},
         {"leftmost", leftmost},
         {"palm", palm},
         {"totals", {{"uniform", total_uniform}, {"leftmost", total_leftmost}}}};
  const auto path = output_dir(cfg) / "enumeration.json";
  write_text_file(path, dump(j));
  return path;
}

}  // namespace bhl
