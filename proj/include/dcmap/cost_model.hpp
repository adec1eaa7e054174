#pragma once

#include "dcmap/dag.hpp"
#include "dcmap/factor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dcmap {

// J entry: dims surviving in a popped cluster-layer's partial result
struct Partial {
  int cluster = 0;
  int layer = 0;
  Dims dims;
};

// Branch-local state handed to a cost model. A node is popped iff assigned.
struct BranchView {
  const Mapping& assignment;
  const std::vector<Partial>& partials;
};

struct Transition {
  double cost = 0;
  Dims dims;
};

struct GhatEstimate {
  double g_so_far = 0;
  double transition = 0;
  double heuristic_remaining = 0;

  double total() const { return g_so_far + transition + heuristic_remaining; }
};

GhatEstimate ghat(double g_so_far, double transition, double heuristic_remaining);

class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual std::string name() const = 0;
  // Z: ascending node ids, all in layer l, to be placed in cluster k
  virtual Transition transition_cost(const BranchView& b, int k, int l, const Dims& Z) const = 0;
  virtual double heuristic_remaining(const BranchView& b) const = 0;
  virtual bool declares_super_additive() const { return false; }
};

class BnComputationCost : public CostModel {
 public:
  BnComputationCost(const Dag& dag, const LayerAssignment& layers, OpCostWeights w = {});

  std::string name() const override { return "bn"; }
  Transition transition_cost(const BranchView& b, int k, int l, const Dims& Z) const override;
  double heuristic_remaining(const BranchView& b) const override;
  // sibling roots sharing child partials can be cheaper together, so no
  bool declares_super_additive() const override { return false; }

  const OpCostWeights& weights() const { return w_; }
  // cost of finishing b with every unpopped node in its own cluster
  double singleton_completion(const BranchView& b) const;

 private:
  const Dag& dag_;
  const LayerAssignment& layers_;
  OpCostWeights w_;
};

std::unique_ptr<CostModel> make_cost_model(const std::string& name, const Dag& dag, const LayerAssignment& layers,
                                           const OpCostWeights& w);

// Sum of transition costs over the cluster-layers of a complete mapping,
// layer by layer, clusters ascending. Also returns the partials if asked.
double evaluate_mapping(const Dag& dag, const LayerAssignment& layers, const CostModel& model, const Mapping& mapping,
                        std::vector<Partial>* partials = nullptr);

struct SuperAdditivitySample {
  NodeId a, b;  // same layer
};

std::vector<SuperAdditivitySample> random_layer_pairs(const Dag& dag, const LayerAssignment& layers, int count,
                                                      std::uint64_t seed);

// Lower layers mapped all-singleton; compares placing a,b together in one
// cluster-layer against two separate ones.
bool is_super_additive_probe(const CostModel& model, const Dag& dag, const LayerAssignment& layers,
                             const std::vector<SuperAdditivitySample>& samples);

// Splits a cluster-layer proposal holding several root nodes so that each
// piece has at most one root.
std::vector<Dims> root_split_filter(const Dag& dag, const Dims& proposal, bool enabled);
int count_roots(const Dag& dag, const Dims& nodes);

}  // namespace dcmap
