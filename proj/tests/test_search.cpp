#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dcmap/oracle.hpp"
#include "dcmap/search.hpp"
#include "support.hpp"

#include <thread>

using namespace dcmap;
using doctest::Approx;
using testing_support::by_name;
using testing_support::fig1;
using testing_support::partitions_of;

namespace {

std::set<std::vector<int>> oracle_partitions(const OptimalSet& o) {
  std::set<std::vector<int>> out;
  for (const auto& m : o.mappings) out.insert(m.partition);
  return out;
}

struct Fig {
  Dag g = fig1();
  LayerAssignment la = assign_layers(g);
  BnComputationCost bn{g, la};
};

}  // namespace

TEST_CASE("reference graph optima") {
  Fig f;
  auto r = run_search(f.g, f.la, f.bn, {});
  CHECK(r.optimal_cost == Approx(54.0));
  CHECK(r.optimal_solution_count == 3u);
  CHECK(partitions_of(r.optimal_mappings()) == oracle_partitions(optimal_set(f.g, f.la, f.bn)));
  CHECK_FALSE(r.terminated_early);
  CHECK(r.iteration_of_first_optimal > 0);
  CHECK(r.iteration_of_first_optimal <= r.iterations_total);
  for (const auto& s : r.solutions) {
    CHECK(s.total_cost == Approx(total_cost(f.g, f.la, s.u, f.bn)));
    CHECK(s.optimal == (std::abs(s.total_cost - 54.0) < 1e-9));
  }
}

TEST_CASE("enumeration mode completes every feasible mapping once") {
  Fig f;
  auto r = run_search(f.g, f.la, f.bn, SearchConfig::enumeration());
  CHECK(r.branches_complete == 48u);
  std::set<std::vector<int>> seen;
  for (const auto& s : r.solutions) seen.insert(canonical_partition(s.u));
  CHECK(seen.size() == 48u);
  std::set<std::vector<int>> all;
  for (const auto& m : enumerate_feasible(f.g, f.la)) all.insert(m.partition);
  CHECK(seen == all);
  CHECK(r.optimal_cost == Approx(54.0));
}

TEST_CASE("same seed, same stream") {
  Fig f;
  for (double alpha : {0.0, 0.3, 1.0}) {
    SearchConfig c;
    c.alpha = alpha;
    c.seed = 17;
    auto a = run_search(f.g, f.la, f.bn, c);
    auto b = run_search(f.g, f.la, f.bn, c);
    REQUIRE(a.solutions.size() == b.solutions.size());
    for (std::size_t i = 0; i < a.solutions.size(); ++i) {
      CHECK(a.solutions[i].u == b.solutions[i].u);
      CHECK(a.solutions[i].iteration == b.solutions[i].iteration);
    }
    CHECK(a.iterations_total == b.iterations_total);
  }
}

TEST_CASE("alpha extremes stay optimal") {
  Fig f;
  auto want = oracle_partitions(optimal_set(f.g, f.la, f.bn));
  for (double alpha : {0.0, 1.0})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SearchConfig c;
      c.alpha = alpha;
      c.seed = seed;
      auto r = run_search(f.g, f.la, f.bn, c);
      CHECK(r.optimal_cost == Approx(54.0));
      CHECK(partitions_of(r.optimal_mappings()) == want);
    }
}

TEST_CASE("iteration and solution hooks") {
  Fig f;
  double last = std::numeric_limits<double>::infinity();
  long count = 0;
  bool monotone = true, live = true, contiguous = true;
  std::vector<SolutionRecord> streamed;
  auto r = run_search(
      f.g, f.la, f.bn, {},
      [&](const SolutionRecord& s) {
        contiguous = contiguous && check_contiguity(f.g, s.u);
        streamed.push_back(s);
      },
      [&](const IterationInfo& it) {
        ++count;
        CHECK(it.iteration == count);
        monotone = monotone && it.gmin <= last + 1e-9;
        last = it.gmin;
        live = live && (it.activation || it.branch_was_alive);
      });
  CHECK(monotone);
  CHECK(live);
  CHECK(contiguous);
  CHECK(count == r.iterations_total);
  CHECK(streamed.size() == r.solutions.size());
  CHECK(last == Approx(r.optimal_cost));
}

TEST_CASE("root split filter leaves the reference optimum alone") {
  Fig f;
  SearchConfig on;
  on.root_split_filter = true;
  auto a = run_search(f.g, f.la, f.bn, {});
  auto b = run_search(f.g, f.la, f.bn, on);
  CHECK(b.optimal_cost == Approx(a.optimal_cost));
  CHECK(partitions_of(b.optimal_mappings()) == partitions_of(a.optimal_mappings()));
  CHECK(b.iteration_of_first_optimal <= a.iteration_of_first_optimal);
}

TEST_CASE("early stops") {
  Fig f;
  auto full = run_search(f.g, f.la, f.bn, {});
  SearchConfig it;
  it.max_iterations = 10;
  auto r = run_search(f.g, f.la, f.bn, it);
  CHECK(r.terminated_early);
  CHECK(r.iterations_total == 10);

  SearchConfig st;
  st.stall_window = 3;
  auto s = run_search(f.g, f.la, f.bn, st);
  CHECK(s.terminated_early);
  CHECK(s.iterations_total < full.iterations_total);

  SearchConfig big;
  big.max_iterations = 1'000'000;
  CHECK_FALSE(run_search(f.g, f.la, f.bn, big).terminated_early);
}

TEST_CASE("config validation") {
  Fig f;
  SearchConfig c;
  c.alpha = 1.5;
  CHECK_THROWS_AS(run_search(f.g, f.la, f.bn, c), std::invalid_argument);
  c = {};
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.stall_window = -1;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = {};
  c.leaf_init = Mapping(f.g.size(), 0);
  CHECK_THROWS_AS(run_search(f.g, f.la, f.bn, c), std::invalid_argument);
}

TEST_CASE("leaf initialisation") {
  Fig f;
  SearchConfig c;
  // F and G start out in one cluster
  Mapping together(f.g.size(), 0);
  together[f.g.at("F")] = together[f.g.at("G")] = 1;
  c.leaf_init = together;
  auto r = run_search(f.g, f.la, f.bn, c);
  REQUIRE_FALSE(r.solutions.empty());
  for (const auto& s : r.solutions) CHECK(s.u[f.g.at("F")] == s.u[f.g.at("G")]);
  CHECK(r.optimal_cost >= 54.0 - 1e-9);

  SearchConfig same;
  Mapping apart(f.g.size(), 0);
  apart[f.g.at("F")] = 1;
  apart[f.g.at("G")] = 2;
  same.leaf_init = apart;
  CHECK(partitions_of(run_search(f.g, f.la, f.bn, same).optimal_mappings()) ==
        partitions_of(run_search(f.g, f.la, f.bn, {}).optimal_mappings()));
}

TEST_CASE("solution stream handed to another thread") {
  Fig f;
  Channel<SolutionRecord> ch;
  std::vector<double> got;
  std::thread consumer([&] {
    while (auto s = ch.pop()) got.push_back(s->total_cost);
  });
  auto r = run_search(f.g, f.la, f.bn, {}, [&](const SolutionRecord& s) { ch.push(s); });
  ch.close();
  consumer.join();
  REQUIRE(got.size() == r.solutions.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == r.solutions[i].total_cost);
  CHECK_FALSE(ch.pop().has_value());
}

TEST_CASE("random graphs against the oracle") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    Dag d = testing_support::random_dag(3 + seed % 8, 0.35, seed, 3);
    auto la = assign_layers(d);
    BnComputationCost bn(d, la);
    auto opt = optimal_set(d, la, bn);
    for (double alpha : {0.0, 0.5, 1.0}) {
      SearchConfig c;
      c.alpha = alpha;
      c.seed = seed;
      auto r = run_search(d, la, bn, c);
      CHECK(r.optimal_cost == Approx(opt.cost));
      CHECK(partitions_of(r.optimal_mappings()) == oracle_partitions(opt));
    }
    auto e = run_search(d, la, bn, SearchConfig::enumeration());
    CHECK(e.branches_complete == opt.evaluated);
  }
}
