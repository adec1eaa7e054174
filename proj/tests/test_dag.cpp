#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dcmap/dag.hpp"
#include "support.hpp"

#include <algorithm>
#include <random>

using namespace dcmap;
using testing_support::by_name;
using testing_support::fig1;

namespace {

// reach[u][v]: directed path of length >= 1
std::vector<std::vector<char>> closure(const Dag& d) {
  int n = d.size();
  std::vector<std::vector<char>> r(n, std::vector<char>(n, 0));
  for (auto [p, c] : d.arcs()) r[p][c] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (r[i][k])
        for (int j = 0; j < n; ++j)
          if (r[k][j]) r[i][j] = 1;
  return r;
}

// longest path to a leaf by memoised recursion
int depth(const Dag& d, NodeId v, std::vector<int>& memo) {
  if (memo[v] >= 0) return memo[v];
  int best = 0;
  for (NodeId c : d.children(v)) best = std::max(best, 1 + depth(d, c, memo));
  return memo[v] = best;
}

bool contiguous_brute(const Dag& d, const Mapping& m) {
  auto r = closure(d);
  int n = d.size();
  for (int u = 0; u < n; ++u)
    for (int w = 0; w < n; ++w)
      for (int v = 0; v < n; ++v)
        if (m[u] == m[v] && m[w] != m[u] && r[u][w] && r[w][v]) return false;
  return true;
}

}  // namespace

TEST_CASE("reference graph layers and labels") {
  Dag g = fig1();
  auto la = assign_layers(g);
  CHECK(la.l_max == 2);
  for (auto [n, l] : std::vector<std::pair<std::string, int>>{
           {"A", 2}, {"B", 2}, {"C", 2}, {"D", 1}, {"E", 1}, {"F", 0}, {"G", 0}})
    CHECK(la.layer[g.at(n)] == l);
  std::string order;
  for (const auto& m : la.members)
    for (NodeId v : m) order += g.name(v);
  CHECK(order == "FGDEABC");
  for (int i = 0; i < 7; ++i) CHECK(la.own_label[g.at(std::string(1, order[i]))] == i + 1);
}

TEST_CASE("layers equal the brute force longest path on random graphs") {
  for (std::uint64_t s = 1; s <= 60; ++s) {
    Dag d = testing_support::random_dag(2 + s % 12, 0.3, s);
    auto la = assign_layers(d);
    std::vector<int> memo(d.size(), -1);
    int mx = 0;
    for (NodeId v = 0; v < d.size(); ++v) {
      CHECK(la.layer[v] == depth(d, v, memo));
      mx = std::max(mx, memo[v]);
    }
    CHECK(la.l_max == mx);
    std::size_t total = 0;
    for (const auto& m : la.members) {
      total += m.size();
      CHECK(std::is_sorted(m.begin(), m.end()));
    }
    CHECK(total == static_cast<std::size_t>(d.size()));
  }
}

TEST_CASE("layering does not depend on declaration order") {
  Dag g = fig1();
  auto la = assign_layers(g);
  std::vector<NodeId> perm(g.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Dag h;
    for (NodeId v : perm) h.add_node(g.name(v), g.states(v));
    auto arcs = g.arcs();
    std::shuffle(arcs.begin(), arcs.end(), rng);
    for (auto [p, c] : arcs) h.add_edge(g.name(p), g.name(c));
    h.validate();
    auto lh = assign_layers(h);
    for (NodeId v = 0; v < g.size(); ++v) CHECK(lh.layer[h.at(g.name(v))] == la.layer[v]);
  }
}

TEST_CASE("same-cluster matrix") {
  Dag g = fig1();
  auto la = assign_layers(g);
  auto s = same_cluster_matrix(g, la);
  auto names = [&](std::vector<NodeId> v) {
    std::string out;
    for (NodeId x : v) out += g.name(x);
    return out;
  };
  CHECK(names(s.row(g.at("D"))) == "ABD");
  CHECK(names(s.row(g.at("F"))) == "ADFG");
  CHECK(s.row(g.at("A")).empty());

  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Dag d = testing_support::random_dag(3 + seed % 9, 0.35, seed);
    auto ld = assign_layers(d);
    auto sd = same_cluster_matrix(d, ld);
    auto r = closure(d);
    for (NodeId i = 0; i < d.size(); ++i)
      for (NodeId j = 0; j < d.size(); ++j) {
        bool reach = false;
        for (NodeId p : d.parents(i)) reach = reach || p == j || r[p][j];
        CHECK(sd.at(i, j) == (reach && ld.layer[j] >= ld.layer[i]));
      }
    // a node may always go to a child's cluster: the parent is inside the child's row
    for (auto [p, c] : d.arcs()) CHECK(sd.at(c, p));
  }
}

TEST_CASE("link and internal nodes") {
  Dag g = fig1();
  Mapping m = by_name(g, "A=1,F=1,D=2,G=2,E=3,B=6,C=7");
  auto nc = classify_nodes(g, m);
  CHECK(is_link_node(g, m, g.at("A")));   // D elsewhere
  CHECK_FALSE(is_link_node(g, m, g.at("D")));
  CHECK(is_link_node(g, m, g.at("E")));
  CHECK_FALSE(is_link_node(g, m, g.at("F")));  // leaves are internal
  std::size_t seen = 0;
  for (auto* side : {&nc.link, &nc.internal})
    for (auto& [k, v] : *side) seen += v.size();
  CHECK(seen == 7u);
  CHECK(nc.internal.at(2) == std::vector<NodeId>{g.at("D"), g.at("G")});
}

TEST_CASE("contiguity against the path brute force") {
  Dag g = fig1();
  CHECK(check_contiguity(g, by_name(g, "A=1,F=1,D=2,G=2,E=3,B=6,C=7")));
  // A and G together with D outside
  CHECK_FALSE(check_contiguity(g, by_name(g, "A=1,F=2,D=3,G=1,E=4,B=5,C=6")));
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Dag d = testing_support::random_dag(3 + seed % 6, 0.4, seed);
    std::uniform_int_distribution<int> lab(1, 3);
    for (int t = 0; t < 30; ++t) {
      Mapping m(d.size());
      for (int& k : m) k = lab(rng);
      CHECK(check_contiguity(d, m) == contiguous_brute(d, m));
    }
  }
}

TEST_CASE("can_join agrees with full contiguity once descendants are placed") {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Dag d = testing_support::random_dag(4 + seed % 5, 0.4, seed);
    auto la = assign_layers(d);
    std::uniform_int_distribution<int> lab(1, 3);
    for (int t = 0; t < 20; ++t) {
      Mapping m(d.size(), 0);
      // place everything below the top layer
      for (NodeId v = 0; v < d.size(); ++v)
        if (la.layer[v] < la.l_max) m[v] = lab(rng);
      if (!check_contiguity(d, m)) continue;
      NodeId v = la.members[la.l_max].front();
      for (int k = 1; k <= 3; ++k) {
        Mapping full = m;
        full[v] = k;
        // unassigned top nodes get fresh labels
        int fresh = 10;
        for (NodeId x = 0; x < d.size(); ++x)
          if (!full[x]) full[x] = fresh++;
        CHECK(can_join(d, m, v, k) == check_contiguity(d, full));
      }
    }
  }
}

TEST_CASE("search space size") {
  Dag g = fig1();
  auto la = assign_layers(g);
  CHECK(search_space_size(g, la) == 48);
  Dag chain = parse_dag_string("node a\nnode b\nnode c\nedge a b\nedge b c\n");
  CHECK(search_space_size(chain, assign_layers(chain)) == 4);
  Dag one = parse_dag_string("node x\n");
  CHECK(search_space_size(one, assign_layers(one)) == 1);
  // a 40-level binary-ish chain overflows 64 bits comfortably
  Dag fan;
  for (int i = 0; i < 70; ++i) fan.add_node("v" + std::to_string(i));
  for (int i = 0; i + 1 < 70; ++i) fan.add_edge(i, i + 1);
  CHECK(search_space_size(fan, assign_layers(fan)) == BigInt(1) << 69);
}

TEST_CASE("parse and format") {
  Dag g = fig1();
  Dag back = parse_dag_string(format_dag(g));
  CHECK(back.size() == g.size());
  CHECK(back.arcs() == g.arcs());
  Dag s = parse_dag_string("# comment\nnode a states=3\nnode b   # trailing\nedge a b\n");
  CHECK(s.states(0) == 3);
  CHECK(s.states(1) == 2);
}

TEST_CASE("validation errors") {
  auto msg = [](const std::string& text) {
    try {
      parse_dag_string(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(msg("") == "no nodes");
  CHECK(msg("node a\nnode b\nedge a b\nedge b a\n").find("cycle") != std::string::npos);
  CHECK(msg("node a\nnode b\n").find("connected") != std::string::npos);
  CHECK(msg("node a\nnode a\n").rfind("line 2:", 0) == 0);
  CHECK(msg("node a\nedge a a\n").rfind("line 2:", 0) == 0);
  CHECK(msg("node a\nnode b\nedge a c\n").rfind("line 3:", 0) == 0);
  CHECK(msg("node a states=x\n").rfind("line 1:", 0) == 0);
  CHECK(msg("vertex a\n").rfind("line 1:", 0) == 0);
  CHECK(msg("node a\nnode b\nedge a b\nedge a b\n").find("duplicate") != std::string::npos);
  CHECK_THROWS_AS(load_dag("/nonexistent/file.dag"), std::exception);
}

TEST_CASE("mapping text and canonical partitions") {
  Dag g = fig1();
  Mapping m = by_name(g, "A=5,B=6,C=7,D=3,E=4,F=1,G=2");
  CHECK(format_mapping(g, m) == "A=5,B=6,C=7,D=3,E=4,F=1,G=2");
  Mapping r = by_name(g, "A=1,F=1,D=2,G=2,E=3,B=6,C=7");
  Mapping relabelled = by_name(g, "A=9,F=9,D=4,G=4,E=8,B=2,C=3");
  CHECK(canonical_partition(r) == canonical_partition(relabelled));
  CHECK(partition_string(g, r) == "{A,F}{B}{C}{D,G}{E}");
  CHECK_THROWS(by_name(g, "A=1"));
  CHECK_THROWS(by_name(g, "A=1,B=2,C=3,D=4,E=5,F=6,Q=7"));
}
