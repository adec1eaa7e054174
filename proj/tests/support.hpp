#pragma once

#include "dcmap/dag.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testing_support {

using namespace dcmap;

inline Dag fig1() { return load_dag(DCMAP_DATA_DIR "/fig1.dag"); }

inline Mapping by_name(const Dag& dag, const std::string& text) { return parse_mapping(dag, text); }

// arcs i->j (i<j) with probability p, then patched until connected
inline Dag random_dag(int n, double p, std::uint64_t seed, int max_states = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0, 1);
  std::uniform_int_distribution<int> st(2, std::max(2, max_states));
  Dag dag;
  for (int i = 0; i < n; ++i) dag.add_node("N" + std::to_string(i), st(rng));
  std::vector<int> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < p) {
        dag.add_edge(i, j);
        comp[find(i)] = find(j);
      }
  for (int j = 1; j < n; ++j)
    if (find(j) != find(0)) {
      std::uniform_int_distribution<int> pick(0, j - 1);
      int i;
      do i = pick(rng);
      while (find(i) == find(j));
      dag.add_edge(i, j);
      comp[find(i)] = find(j);
    }
  dag.validate();
  return dag;
}

// every node has at most one path to any other: random tree edges only
inline Dag random_polytree(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0, 1);
  Dag dag;
  for (int i = 0; i < n; ++i) dag.add_node("T" + std::to_string(i));
  for (int j = 1; j < n; ++j) {
    std::uniform_int_distribution<int> pick(0, j - 1);
    int i = pick(rng);
    if (coin(rng) < 0.5)
      dag.add_edge(i, j);
    else
      dag.add_edge(j, i);
  }
  dag.validate();
  return dag;
}

inline std::set<std::vector<int>> partitions_of(const std::vector<Mapping>& maps) {
  std::set<std::vector<int>> out;
  for (const auto& m : maps) out.insert(canonical_partition(m));
  return out;
}

}  // namespace testing_support
