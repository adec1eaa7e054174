#include "dcmap/cost_model.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

namespace dcmap {

GhatEstimate ghat(double g_so_far, double transition, double heuristic_remaining) {
  if (g_so_far < 0 || transition < 0 || heuristic_remaining < 0)
    throw std::invalid_argument("negative cost component in estimate");
  return {g_so_far, transition, heuristic_remaining};
}

BnComputationCost::BnComputationCost(const Dag& dag, const LayerAssignment& layers, OpCostWeights w)
    : dag_(dag), layers_(layers), w_(w) {
  w_.check();
}

namespace {

bool smaller(const Dag& dag, const Dims& a, const Dims& b) {
  double sa = table_size(dag, a), sb = table_size(dag, b);
  return sa != sb ? sa < sb : a < b;
}

// chained accumulator; `loaded` false until the first multiply
struct Acc {
  const Dag& dag;
  const OpCostWeights& w;
  Dims dims{};
  bool loaded = false;
  double cost = 0;

  Acc(const Dag& d, const OpCostWeights& ww) : dag(d), w(ww) {}

  void mul(const Dims& f) {
    dims = loaded ? dims_union(dims, f) : f;
    loaded = true;
    cost += table_size(dag, dims) * w.mul;
  }
  void sum_out(NodeId v) {
    dims.erase(std::lower_bound(dims.begin(), dims.end(), v));
    cost += (dag.states(v) - 1) * table_size(dag, dims) * w.add;
  }
};

}  // namespace

Transition BnComputationCost::transition_cost(const BranchView& b, int k, int l, const Dims& Z) const {
  if (Z.empty()) throw std::invalid_argument("transition cost of an empty cluster-layer");
  for (int low = 0; low < l; ++low)
    for (NodeId v : layers_.members[low])
      if (!b.assignment[v]) throw std::logic_error("transition cost before layer " + std::to_string(low) + " is popped");

  Acc acc(dag_, w_);
  std::vector<Dims> msgs;
  for (const Partial& p : b.partials) {
    if (p.layer >= l || !dims_meet(p.dims, Z)) continue;
    // restricting the child's result to Z is paid here
    Dims cur = p.dims;
    for (NodeId v : dims_minus(p.dims, Z)) {
      cur.erase(std::lower_bound(cur.begin(), cur.end(), v));
      acc.cost += (dag_.states(v) - 1) * table_size(dag_, cur) * w_.add;
    }
    msgs.push_back(std::move(cur));
  }
  std::sort(msgs.begin(), msgs.end(), [&](const Dims& x, const Dims& y) { return smaller(dag_, x, y); });
  for (const Dims& m : msgs) acc.mul(m);
  for (NodeId v : Z) acc.mul(cpt_scope(dag_, v));
  for (NodeId v : Z) {
    bool internal = true;
    for (NodeId c : dag_.children(v))
      if (b.assignment[c] != k) internal = false;
    if (internal) acc.sum_out(v);
  }
  return {acc.cost, acc.dims};
}

double BnComputationCost::heuristic_remaining(const BranchView& b) const {
  const Mapping& u = b.assignment;
  std::vector<const Dims*> frontier;
  for (const Partial& p : b.partials)
    if (std::any_of(p.dims.begin(), p.dims.end(), [&](NodeId v) { return !u[v]; })) frontier.push_back(&p.dims);
  std::stable_sort(frontier.begin(), frontier.end(), [&](const Dims* x, const Dims* y) {
    double sx = table_size(dag_, *x), sy = table_size(dag_, *y);
    return sx != sy ? sx > sy : *x < *y;
  });

  Acc acc(dag_, w_);
  for (const Dims* f : frontier) {
    acc.mul(*f);
    for (NodeId v : Dims(acc.dims))
      if (u[v]) acc.sum_out(v);
  }
  for (const auto& m : layers_.members)
    for (NodeId v : m) {
      if (u[v]) continue;
      acc.mul(cpt_scope(dag_, v));
      acc.sum_out(v);
    }
  return std::max(acc.cost, singleton_completion(b));
}

// finishing every unpopped node as its own cluster is a real completion, so this bounds the optimum from above
double BnComputationCost::singleton_completion(const BranchView& b) const {
  Mapping u = b.assignment;
  std::vector<Partial> partials = b.partials;
  double total = 0;
  for (int l = 0; l <= layers_.l_max; ++l) {
    std::vector<NodeId> todo;
    for (NodeId v : layers_.members[l])
      if (!u[v]) todo.push_back(v);
    if (todo.empty()) continue;
    for (NodeId v : todo) u[v] = layers_.own_label[v];
    std::vector<Partial> fresh;
    for (NodeId v : todo) {
      Transition t = transition_cost({u, partials}, u[v], l, {v});
      total += t.cost;
      fresh.push_back({u[v], l, std::move(t.dims)});
    }
    partials.insert(partials.end(), fresh.begin(), fresh.end());
  }
  return total;
}

std::unique_ptr<CostModel> make_cost_model(const std::string& name, const Dag& dag, const LayerAssignment& layers,
                                           const OpCostWeights& w) {
  if (name == "bn") return std::make_unique<BnComputationCost>(dag, layers, w);
  throw std::invalid_argument("unknown cost model '" + name + "'");
}

double evaluate_mapping(const Dag& dag, const LayerAssignment& layers, const CostModel& model, const Mapping& mapping,
                        std::vector<Partial>* out) {
  if (static_cast<int>(mapping.size()) != dag.size()) throw std::invalid_argument("mapping size mismatch");
  for (int k : mapping)
    if (k <= 0) throw std::invalid_argument("mapping leaves a node unassigned");
  std::vector<Partial> partials;
  Mapping partial_u(dag.size(), 0);
  double total = 0;
  for (int l = 0; l <= layers.l_max; ++l) {
    std::map<int, Dims> by_k;
    for (NodeId v : layers.members[l]) by_k[mapping[v]].push_back(v);
    std::vector<Partial> fresh;
    for (auto& [k, Z] : by_k) {
      for (NodeId v : Z) partial_u[v] = k;
      Transition t = model.transition_cost({partial_u, partials}, k, l, Z);
      total += t.cost;
      fresh.push_back({k, l, std::move(t.dims)});
    }
    partials.insert(partials.end(), fresh.begin(), fresh.end());
  }
  if (out) *out = std::move(partials);
  return total;
}

std::vector<SuperAdditivitySample> random_layer_pairs(const Dag&, const LayerAssignment& layers, int count,
                                                      std::uint64_t seed) {
  std::vector<SuperAdditivitySample> all;
  for (const auto& m : layers.members)
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j) all.push_back({m[i], m[j]});
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  if (static_cast<int>(all.size()) > count) all.resize(count);
  return all;
}

bool is_super_additive_probe(const CostModel& model, const Dag& dag, const LayerAssignment& layers,
                             const std::vector<SuperAdditivitySample>& samples) {
  for (const auto& s : samples) {
    int l = layers.layer[s.a];
    if (layers.layer[s.b] != l) throw std::invalid_argument("probe pair spans two layers");
    Mapping u(dag.size(), 0);
    std::vector<Partial> partials;
    for (int low = 0; low < l; ++low) {
      for (NodeId v : layers.members[low]) u[v] = layers.own_label[v];
      std::vector<Partial> fresh;
      for (NodeId v : layers.members[low]) {
        Transition t = model.transition_cost({u, partials}, u[v], low, {v});
        fresh.push_back({u[v], low, std::move(t.dims)});
      }
      partials.insert(partials.end(), fresh.begin(), fresh.end());
    }
    int ka = layers.own_label[s.a], kb = layers.own_label[s.b];
    Mapping sep = u;
    sep[s.a] = ka;
    sep[s.b] = kb;
    double apart = model.transition_cost({sep, partials}, ka, l, {s.a}).cost +
                   model.transition_cost({sep, partials}, kb, l, {s.b}).cost;
    Mapping joint = u;
    joint[s.a] = joint[s.b] = ka;
    double together = model.transition_cost({joint, partials}, ka, l, make_dims({s.a, s.b})).cost;
    if (!(together > apart)) return false;
  }
  return true;
}

int count_roots(const Dag& dag, const Dims& nodes) {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [&](NodeId v) { return dag.is_root(v); }));
}

std::vector<Dims> root_split_filter(const Dag& dag, const Dims& proposal, bool enabled) {
  if (!enabled || count_roots(dag, proposal) < 2) return {proposal};
  std::vector<Dims> out(1);
  bool first_root = true;
  for (NodeId v : proposal) {
    if (!dag.is_root(v) || first_root) {
      out[0].push_back(v);
      if (dag.is_root(v)) first_root = false;
    } else {
      out.push_back({v});
    }
  }
  return out;
}

}  // namespace dcmap
