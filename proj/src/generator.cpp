#include "dcmap/generator.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dcmap {

void GeneratorSpec::check() const {
  if (n < 1) throw std::invalid_argument("generator needs n >= 1");
  if (layers < 0) throw std::invalid_argument("layer budget must be >= 0");
  if (layers == 1 && n > 1) throw std::invalid_argument("a connected graph with n > 1 needs at least two layers");
  if (neighbours < 1) throw std::invalid_argument("neighbours must be >= 1");
  if (rewire < 0 || rewire > 1) throw std::invalid_argument("rewiring probability must lie in [0,1]");
  if (max_in < 1 || max_out < 1) throw std::invalid_argument("degree caps must be >= 1");
  if (states.empty()) throw std::invalid_argument("empty state distribution");
  for (auto [k, p] : states)
    if (k < 2 || p <= 0) throw std::invalid_argument("state distribution needs k >= 2 and p > 0");
}

std::vector<std::pair<int, double>> parse_state_distribution(const std::string& text) {
  std::vector<std::pair<int, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        out.emplace_back(std::stoi(item), 1.0);
      } else {
        out.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad state distribution item '" + item + "'");
    }
  }
  return out;
}

Dag generate_small_world(const GeneratorSpec& spec) {
  spec.check();
  std::mt19937_64 rng(spec.seed);
  int n = spec.n;
  // rank bounds path length when a layer budget is given
  std::vector<int> rank(n);
  for (int i = 0; i < n; ++i) rank[i] = spec.layers ? i * spec.layers / n : i;

  std::set<std::pair<int, int>> arcs;
  std::vector<int> indeg(n, 0), outdeg(n, 0);
  auto fits = [&](int p, int c) {
    return rank[p] < rank[c] && !arcs.count({p, c}) && indeg[c] < spec.max_in && outdeg[p] < spec.max_out;
  };
  auto add = [&](int p, int c) {
    arcs.insert({p, c});
    ++indeg[c];
    ++outdeg[p];
  };
  auto remove = [&](int p, int c) {
    arcs.erase({p, c});
    --indeg[c];
    --outdeg[p];
  };

  for (int i = 0; i < n; ++i)
    for (int j = i + 1, taken = 0; j < n && taken < spec.neighbours; ++j)
      if (rank[j] > rank[i] && fits(i, j)) {
        add(i, j);
        ++taken;
      }

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::pair<int, int>> lattice(arcs.begin(), arcs.end());
  for (auto [p, c] : lattice) {
    if (coin(rng) >= spec.rewire) continue;
    // new parent for c, weighted by out-degree + 1
    std::vector<int> cand;
    std::vector<double> weight;
    for (int q = 0; q < n; ++q)
      if (q != p && rank[q] < rank[c] && !arcs.count({q, c}) && outdeg[q] < spec.max_out) {
        cand.push_back(q);
        weight.push_back(outdeg[q] + 1.0);
      }
    if (cand.empty()) continue;
    std::discrete_distribution<int> pick(weight.begin(), weight.end());
    int q = cand[pick(rng)];
    remove(p, c);
    add(q, c);
  }

  // connect components, ignoring degree caps if necessary
  std::vector<int> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  auto find = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (auto [p, c] : arcs) comp[find(p)] = find(c);
  for (int i = 1; i < n; ++i) {
    if (find(i) == find(0)) continue;
    int best_p = -1, best_c = -1;
    int ri = find(i), r0 = find(0);
    for (int a = 0; a < n && best_p < 0; ++a)
      for (int b = 0; b < n; ++b) {
        bool across = (find(a) == r0 && find(b) == ri) || (find(a) == ri && find(b) == r0);
        if (across && rank[a] < rank[b]) {
          best_p = a;
          best_c = b;
          break;
        }
      }
    if (best_p < 0) throw std::runtime_error("could not connect generated graph");
    add(best_p, best_c);
    comp[find(best_p)] = find(best_c);
  }

  std::vector<double> w;
  for (auto [k, p] : spec.states) w.push_back(p);
  std::discrete_distribution<int> states(w.begin(), w.end());
  Dag dag;
  for (int i = 0; i < n; ++i) dag.add_node("X" + std::to_string(i + 1), spec.states[states(rng)].first);
  for (auto [p, c] : arcs) dag.add_edge(p, c);
  dag.validate();
  return dag;
}

DegreeHistogram degree_histogram(const Dag& dag) {
  DegreeHistogram h;
  for (NodeId v = 0; v < dag.size(); ++v) {
    ++h.in[static_cast<int>(dag.parents(v).size())];
    ++h.out[static_cast<int>(dag.children(v).size())];
  }
  return h;
}

}  // namespace dcmap
