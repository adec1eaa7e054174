#pragma once

#include "dcmap/cost_model.hpp"
#include "dcmap/dag.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace dcmap {

struct FeasibleMapping {
  Mapping u;
  double total_cost = 0;
  std::vector<int> partition;  // canonical_partition(u)
};

class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(const BigInt& size, const BigInt& cap);
  BigInt size;
};

inline const BigInt kDefaultOracleCap = 10'000'000;

// Own label or a child's cluster for every node, ascending layers, keeping
// only contiguous choices. Streams each complete mapping to `fn`.
void for_each_feasible(const Dag& dag, const LayerAssignment& layers, const std::function<void(const Mapping&)>& fn,
                       const BigInt& cap = kDefaultOracleCap);
std::vector<FeasibleMapping> enumerate_feasible(const Dag& dag, const LayerAssignment& layers,
                                                const BigInt& cap = kDefaultOracleCap);

// choices counted with multiplicity and no contiguity filter
BigInt proposal_choice_count(const Dag& dag, const LayerAssignment& layers);

double total_cost(const Dag& dag, const LayerAssignment& layers, const Mapping& mapping, const CostModel& model);

struct OptimalSet {
  double cost = 0;
  std::vector<FeasibleMapping> mappings;
  std::size_t evaluated = 0;
};

OptimalSet optimal_set(const Dag& dag, const LayerAssignment& layers, const CostModel& model,
                       const BigInt& cap = kDefaultOracleCap, double tol = 1e-9);

class CoMembershipMatrix {
 public:
  explicit CoMembershipMatrix(const Mapping& mapping);
  int n() const { return n_; }
  bool at(int i, int j) const { return y_[i * n_ + j] != 0; }
  std::size_t ones() const;
  double dot(const CoMembershipMatrix& other) const;

 private:
  int n_;
  std::vector<std::uint8_t> y_;
};

double similarity(const CoMembershipMatrix& y, const std::vector<CoMembershipMatrix>& optimal);

}  // namespace dcmap
