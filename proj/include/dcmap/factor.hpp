#pragma once

#include "dcmap/dag.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dcmap {

// A probability table is never stored; only its dimension set.
using Dims = std::vector<NodeId>;  // sorted, unique

Dims make_dims(std::vector<NodeId> v);
Dims dims_union(const Dims& a, const Dims& b);
Dims dims_minus(const Dims& a, const Dims& b);
Dims dims_intersect(const Dims& a, const Dims& b);
bool dims_contains(const Dims& a, NodeId v);
bool dims_meet(const Dims& a, const Dims& b);
double table_size(const Dag& dag, const Dims& d);
Dims cpt_scope(const Dag& dag, NodeId v);  // {v} + Par(v)
std::string dims_string(const Dag& dag, const Dims& d);

struct OpCostWeights {
  double add = 0.6;
  double mul = 1.0;
  double div = 3.0;

  void check() const;  // throws std::invalid_argument unless all > 0
};

// acc == nullptr means the scalar accumulator
struct OpResult {
  Dims dims;
  double cost = 0;
};

OpResult multiply_cost(const Dag& dag, const Dims* acc, const Dims& f, const OpCostWeights& w);
OpResult marginalize_cost(const Dag& dag, const Dims& acc, NodeId node, const OpCostWeights& w);
double divide_cost(const Dag& dag, const Dims& d, const OpCostWeights& w);

enum class StepKind { Multiply, Marginalize, Divide, Copy };

struct Step {
  StepKind kind;
  int acc = 0;
  Dims dims;         // Multiply: factor; Divide: ratio dims
  NodeId node = -1;  // Marginalize
  int src = -1;      // Copy
  std::string tag;   // free-form grouping label
};

struct Schedule {
  std::vector<Step> steps;

  void multiply(int acc, Dims f, std::string tag = {});
  void marginalize(int acc, NodeId node, std::string tag = {});
  void divide(int acc, Dims d, std::string tag = {});
  void copy(int dst, int src, std::string tag = {});
};

struct StepCost {
  double cost = 0;
  Dims after;  // accumulator dims after the step
};

struct ScheduleResult {
  double total = 0;
  std::vector<StepCost> steps;

  double tagged(const Schedule& s, const std::string& tag) const;
};

class ScheduleError : public std::runtime_error {
 public:
  ScheduleError(std::size_t index, const std::string& msg);
  std::size_t index;
};

ScheduleResult eval_schedule(const Dag& dag, const Schedule& s, const OpCostWeights& w);
void write_schedule_tsv(std::ostream& out, const Dag& dag, const Schedule& s, const ScheduleResult& r, bool precise);

// Bucket elimination for the marginal of `target`, one chained accumulator.
// Each eliminated node first absorbs every unused CPT mentioning it
// (ascending child id), then is summed out.
Schedule bucket_elimination_schedule(const Dag& dag, NodeId target, const std::vector<NodeId>& order);
// layer ascending, id descending, target excluded
std::vector<NodeId> default_elimination_order(const Dag& dag, const LayerAssignment& layers, NodeId target);

// Hand-coded four-clique jointree {AF, ABD, CE, DEG} for the seven-node
// reference graph (nodes A..G). Full two-pass propagation + every node
// marginal.
Schedule jointree_fixture_schedule(const Dag& dag);

// Forward/backward propagation over cluster-layers and per-node
// posteriors for a contiguous mapping. The forward step of cluster k at
// layer l is tagged "fwd k l", backward "bwd k l", posteriors "post".
Schedule cluster_inference_schedule(const Dag& dag, const LayerAssignment& layers, const Mapping& mapping);
double cluster_inference_cost(const Dag& dag, const Mapping& mapping, const LayerAssignment& layers,
                              const OpCostWeights& w);

}  // namespace dcmap
