#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcmap {

using NodeId = int;  // dense, 0-based in file order
using Mapping = std::vector<int>;  // node -> cluster label, 0 = unassigned
using BigInt = boost::multiprecision::cpp_int;

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  std::string name;
  int states = 2;
};

class Dag {
 public:
  NodeId add_node(std::string name, int states = 2);
  void add_edge(NodeId parent, NodeId child);
  void add_edge(const std::string& parent, const std::string& child);

  // throws ValidationError: empty, self arcs, duplicate arcs, cycles, disconnected
  void validate() const;

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(NodeId v) const { return nodes_[v]; }
  const std::string& name(NodeId v) const { return nodes_[v].name; }
  int states(NodeId v) const { return nodes_[v].states; }
  const std::vector<NodeId>& parents(NodeId v) const { return parents_[v]; }
  const std::vector<NodeId>& children(NodeId v) const { return children_[v]; }
  bool is_leaf(NodeId v) const { return children_[v].empty(); }
  bool is_root(NodeId v) const { return parents_[v].empty(); }
  std::vector<std::pair<NodeId, NodeId>> arcs() const;

  // -1 when absent
  NodeId find(const std::string& name) const;
  NodeId at(const std::string& name) const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<NodeId>> parents_, children_;
  std::map<std::string, NodeId> index_;
};

Dag parse_dag(std::istream& in);
Dag parse_dag_string(const std::string& text);
Dag load_dag(const std::string& path);
std::string format_dag(const Dag& dag);

struct LayerAssignment {
  std::vector<int> layer;
  int l_max = 0;
  std::vector<std::vector<NodeId>> members;  // ascending id within a layer

  // 1-based rank of the node in (layer, id) order; used as the label of
  // the cluster a node founds, so the i-th leaf gets label i
  std::vector<int> own_label;
};

LayerAssignment assign_layers(const Dag& dag);

struct SameClusterMatrix {
  int n = 0;
  std::set<std::pair<NodeId, NodeId>> ones;

  bool at(NodeId i, NodeId j) const { return ones.count({i, j}) > 0; }
  std::vector<NodeId> column(NodeId j) const;
  std::vector<NodeId> row(NodeId i) const;
};

SameClusterMatrix same_cluster_matrix(const Dag& dag, const LayerAssignment& layers);

struct NodeClassification {
  std::map<int, std::vector<NodeId>> link;      // pi
  std::map<int, std::vector<NodeId>> internal;  // phi
};

bool is_link_node(const Dag& dag, const Mapping& mapping, NodeId v);
NodeClassification classify_nodes(const Dag& dag, const Mapping& mapping);

// no directed path leaves a cluster and comes back to it
bool check_contiguity(const Dag& dag, const Mapping& mapping);

// Would assigning v to cluster k keep the mapping contiguous? Needs every
// descendant of v assigned; unassigned entries (0) count as "elsewhere".
bool can_join(const Dag& dag, const Mapping& mapping, NodeId v, int k);

BigInt search_space_size(const Dag& dag, const LayerAssignment& layers);

// canonical partition: labels relabelled by first occurrence in id order
std::vector<int> canonical_partition(const Mapping& mapping);
std::string partition_string(const Dag& dag, const Mapping& mapping);

Mapping parse_mapping(const Dag& dag, const std::string& text);  // "A=1,F=1,..."
std::string format_mapping(const Dag& dag, const Mapping& mapping);

}  // namespace dcmap
