#include "dcmap/compare.hpp"

#include <algorithm>
#include <set>

namespace dcmap {

bool same_partitions(const std::vector<Mapping>& a, const std::vector<Mapping>& b) {
  std::set<std::vector<int>> pa, pb;
  for (const auto& m : a) pa.insert(canonical_partition(m));
  for (const auto& m : b) pb.insert(canonical_partition(m));
  return pa == pb;
}

std::vector<CompareRow> run_compare(const Dag& dag, const LayerAssignment& layers, const CostModel& model,
                                    const CompareOptions& opt) {
  std::optional<OptimalSet> oracle;
  try {
    oracle = optimal_set(dag, layers, model, opt.cap);
  } catch (const CapExceeded&) {
  }
  std::vector<Mapping> oracle_maps;
  std::vector<CoMembershipMatrix> ystar;
  if (oracle)
    for (const auto& m : oracle->mappings) {
      oracle_maps.push_back(m.u);
      ystar.emplace_back(m.u);
    }

  auto seeds = opt.seeds;
  auto alphas = opt.alphas;
  std::sort(seeds.begin(), seeds.end());
  std::sort(alphas.begin(), alphas.end());
  std::vector<CompareRow> rows;
  for (auto seed : seeds)
    for (double alpha : alphas) {
      CompareRow row;
      row.seed = seed;
      row.alpha = alpha;
      SearchConfig cfg = opt.base;
      cfg.seed = seed;
      cfg.alpha = alpha;
      row.report = run_search(dag, layers, model, cfg);
      if (!row.report.solutions.empty()) row.first_cost = row.report.solutions.front().total_cost;
      if (oracle) {
        row.oracle_cost = oracle->cost;
        row.partitions_match = same_partitions(row.report.optimal_mappings(), oracle_maps);
        for (const auto& s : row.report.solutions) row.similarity.push_back(similarity(CoMembershipMatrix(s.u), ystar));
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

}  // namespace dcmap
