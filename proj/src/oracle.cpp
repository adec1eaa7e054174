#include "dcmap/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcmap {

CapExceeded::CapExceeded(const BigInt& s, const BigInt& cap)
    : std::runtime_error("search space of " + s.str() + " mappings exceeds the enumeration cap " + cap.str()),
      size(s) {}

namespace {

std::vector<NodeId> layer_order(const LayerAssignment& layers) {
  std::vector<NodeId> order;
  for (const auto& m : layers.members) order.insert(order.end(), m.begin(), m.end());
  return order;
}

}  // namespace

void for_each_feasible(const Dag& dag, const LayerAssignment& layers, const std::function<void(const Mapping&)>& fn,
                       const BigInt& cap) {
  BigInt size = search_space_size(dag, layers);
  if (size > cap) throw CapExceeded(size, cap);
  auto order = layer_order(layers);
  Mapping u(dag.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == order.size()) {
      fn(u);
      return;
    }
    NodeId v = order[i];
    std::vector<int> opts{layers.own_label[v]};
    for (NodeId c : dag.children(v)) opts.push_back(u[c]);
    std::sort(opts.begin(), opts.end());
    opts.erase(std::unique(opts.begin(), opts.end()), opts.end());
    for (int k : opts) {
      if (!can_join(dag, u, v, k)) continue;
      u[v] = k;
      rec(i + 1);
    }
    u[v] = 0;
  };
  rec(0);
}

std::vector<FeasibleMapping> enumerate_feasible(const Dag& dag, const LayerAssignment& layers, const BigInt& cap) {
  std::vector<FeasibleMapping> out;
  for_each_feasible(
      dag, layers, [&](const Mapping& u) { out.push_back({u, 0.0, canonical_partition(u)}); }, cap);
  return out;
}

BigInt proposal_choice_count(const Dag& dag, const LayerAssignment& layers) {
  auto order = layer_order(layers);
  BigInt count = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == order.size()) {
      ++count;
      return;
    }
    NodeId v = order[i];
    // own cluster, then one branch per child
    std::size_t choices = layers.layer[v] == 0 ? 1 : dag.children(v).size() + 1;
    for (std::size_t c = 0; c < choices; ++c) rec(i + 1);
  };
  rec(0);
  return count;
}

double total_cost(const Dag& dag, const LayerAssignment& layers, const Mapping& mapping, const CostModel& model) {
  if (static_cast<int>(mapping.size()) != dag.size()) throw std::invalid_argument("mapping size mismatch");
  for (int k : mapping)
    if (k <= 0) throw std::invalid_argument("mapping leaves a node unassigned");
  if (!check_contiguity(dag, mapping)) throw std::invalid_argument("mapping is not contiguous");
  return evaluate_mapping(dag, layers, model, mapping);
}

OptimalSet optimal_set(const Dag& dag, const LayerAssignment& layers, const CostModel& model, const BigInt& cap,
                       double tol) {
  OptimalSet best;
  best.cost = std::numeric_limits<double>::infinity();
  for_each_feasible(
      dag, layers,
      [&](const Mapping& u) {
        ++best.evaluated;
        double c = evaluate_mapping(dag, layers, model, u);
        if (c < best.cost - tol) {
          best.cost = c;
          best.mappings.clear();
        }
        if (std::abs(c - best.cost) <= tol) best.mappings.push_back({u, c, canonical_partition(u)});
      },
      cap);
  // entries admitted before the minimum settled may sit just above it
  std::erase_if(best.mappings, [&](const FeasibleMapping& m) { return m.total_cost > best.cost + tol; });
  std::sort(best.mappings.begin(), best.mappings.end(),
            [](const FeasibleMapping& a, const FeasibleMapping& b) { return a.partition < b.partition; });
  return best;
}

CoMembershipMatrix::CoMembershipMatrix(const Mapping& mapping) : n_(static_cast<int>(mapping.size())) {
  y_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) y_[i * n_ + j] = mapping[i] == mapping[j];
}

std::size_t CoMembershipMatrix::ones() const { return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), 1)); }

double CoMembershipMatrix::dot(const CoMembershipMatrix& other) const {
  if (other.n_ != n_) throw std::invalid_argument("co-membership matrices differ in size");
  std::size_t s = 0;
  for (std::size_t i = 0; i < y_.size(); ++i) s += y_[i] & other.y_[i];
  return static_cast<double>(s);
}

double similarity(const CoMembershipMatrix& y, const std::vector<CoMembershipMatrix>& optimal) {
  double best = 0;
  for (const auto& ys : optimal) best = std::max(best, y.dot(ys) / static_cast<double>(ys.ones()));
  return best;
}

}  // namespace dcmap
