#pragma once

#include "dcmap/cost_model.hpp"
#include "dcmap/oracle.hpp"
#include "dcmap/search.hpp"

#include <optional>
#include <vector>

namespace dcmap {

struct CompareRow {
  std::uint64_t seed = 0;
  double alpha = 0;
  SearchReport report;
  std::optional<double> oracle_cost;  // empty when over the cap
  bool partitions_match = false;      // engine optimal set == oracle set
  double first_cost = 0;
  std::vector<double> similarity;     // per solution, vs oracle optima
};

struct CompareOptions {
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> alphas{0.5};
  SearchConfig base;
  BigInt cap = kDefaultOracleCap;
};

// rows ordered by (seed, alpha)
std::vector<CompareRow> run_compare(const Dag& dag, const LayerAssignment& layers, const CostModel& model,
                                    const CompareOptions& opt);

bool same_partitions(const std::vector<Mapping>& a, const std::vector<Mapping>& b);

}  // namespace dcmap
