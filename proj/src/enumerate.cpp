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

#include "bhl/enumerate.hpp"

#include <sstream>

#include "bhl/errors.hpp"

namespace bhl {

namespace {

struct Node {
  int parent;
  int first_child = 0;
  int n_children = 0;
};

class Enumerator {
 public:
  Enumerator(const OffspringDistribution& d, int generations, std::size_t budget)
      : d_(d), n_(generations), budget_(budget) {
    for (int k = 0; k <= d.max_offspring(); ++k)
      if (d.prob(k) > 0.0) support_.push_back(k);
    law_.generations = generations;
  }

  ExactLineageLaw run() {
    nodes_.push_back(Node{-1});
    generation(0, 0, 1, 1.0L);
    law_.extinction = static_cast<double>(extinction_);
    law_.mean_population = static_cast<double>(mean_);
    for (const auto& [k, v] : uniform_) law_.uniform[k] = static_cast<double>(v);
    for (const auto& [k, v] : palm_) law_.palm[k] = static_cast<double>(v);
    for (const auto& [k, v] : leftmost_) law_.leftmost[k] = static_cast<double>(v);
    return std::move(law_);
  }

 private:
  // Assigns offspring to the individuals [begin, end) of generation g.
  void generation(int g, int begin, int end, long double prob) {
    if (g == n_) {
      leaf(begin, end, prob);
      return;
    }
    const int next_begin = static_cast<int>(nodes_.size());
    assign(g, begin, end, begin, next_begin, prob);
  }

  void assign(int g, int begin, int end, int cur, int next_begin, long double prob) {
    if (cur == end) {
      generation(g + 1, next_begin, static_cast<int>(nodes_.size()), prob);
      return;
    }
    for (int k : support_) {
      const std::size_t mark = nodes_.size();
      nodes_[static_cast<std::size_t>(cur)].first_child = static_cast<int>(mark);
      nodes_[static_cast<std::size_t>(cur)].n_children = k;
      for (int c = 0; c < k; ++c) nodes_.push_back(Node{cur});
      assign(g, begin, end, cur + 1, next_begin, prob * d_.prob(k));
      nodes_.resize(mark);
    }
    nodes_[static_cast<std::size_t>(cur)].n_children = 0;
  }

  std::vector<int> sizes_to(int v) const {
    std::vector<int> sizes;
    for (int a = nodes_[static_cast<std::size_t>(v)].parent; a >= 0; a = nodes_[static_cast<std::size_t>(a)].parent)
      sizes.push_back(nodes_[static_cast<std::size_t>(a)].n_children);
    return {sizes.rbegin(), sizes.rend()};
  }

  void leaf(int begin, int end, long double prob) {
    if (++law_.genealogies > budget_) {
      std::ostringstream os;
      os << "enumerate: more than " << budget_ << " genealogies";
      throw CapacityError(os.str());
    }
    const int alive = end - begin;
    mean_ += prob * alive;
    if (alive == 0) {
      extinction_ += prob;
      return;
    }
    for (int v = begin; v < end; ++v) {
      const auto sizes = sizes_to(v);
      uniform_[sizes] += prob / alive;
      palm_[sizes] += prob;
    }

    // Subtree survival; children always follow their parent in nodes_.
    std::vector<char> survives(nodes_.size(), 0);
    for (int v = begin; v < end; ++v) survives[static_cast<std::size_t>(v)] = 1;
    for (std::size_t i = nodes_.size(); i-- > 1;)
      if (survives[i]) survives[static_cast<std::size_t>(nodes_[i].parent)] = 1;

    std::vector<int> sizes, ks;
    int cur = 0;
    while (cur < begin) {
      const Node& a = nodes_[static_cast<std::size_t>(cur)];
      int k = 0;
      while (!survives[static_cast<std::size_t>(a.first_child + k)]) ++k;
      sizes.push_back(a.n_children);
      ks.push_back(k);
      cur = a.first_child + k;
    }
    leftmost_[{sizes, ks}] += prob;
  }

  const OffspringDistribution& d_;
  int n_;
  std::size_t budget_;
  std::vector<int> support_;
  std::vector<Node> nodes_;
  ExactLineageLaw law_;
  // Extended precision keeps the sums over ~1e6 genealogies at 1e-15.
  long double extinction_ = 0.0L, mean_ = 0.0L;
  std::map<std::vector<int>, long double> uniform_, palm_;
  std::map<std::pair<std::vector<int>, std::vector<int>>, long double> leftmost_;
};

}  // namespace

ExactLineageLaw enumerate_lattice(const OffspringDistribution& d, int generations, std::size_t budget) {
  if (generations < 1) throw ConfigError("enumerate: horizon must be >= 1");
  return Enumerator(d, generations, budget).run();
}

}  // namespace bhl
