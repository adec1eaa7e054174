#include "dcmap/dag.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

namespace dcmap {

NodeId Dag::add_node(std::string name, int states) {
  if (name.empty()) throw ValidationError("empty node name");
  if (index_.count(name)) throw ValidationError("duplicate node '" + name + "'");
  if (states < 1) throw ValidationError("node '" + name + "' needs states >= 1");
  NodeId id = size();
  index_[name] = id;
  nodes_.push_back({std::move(name), states});
  parents_.emplace_back();
  children_.emplace_back();
  return id;
}

void Dag::add_edge(NodeId parent, NodeId child) {
  if (parent < 0 || parent >= size() || child < 0 || child >= size())
    throw ValidationError("edge endpoint out of range");
  if (parent == child) throw ValidationError("self arc on '" + name(parent) + "'");
  auto& ch = children_[parent];
  if (std::find(ch.begin(), ch.end(), child) != ch.end())
    throw ValidationError("duplicate arc " + name(parent) + "->" + name(child));
  ch.insert(std::lower_bound(ch.begin(), ch.end(), child), child);
  auto& pa = parents_[child];
  pa.insert(std::lower_bound(pa.begin(), pa.end(), parent), parent);
}

void Dag::add_edge(const std::string& parent, const std::string& child) {
  NodeId p = find(parent), c = find(child);
  if (p < 0) throw ValidationError("edge references unknown node '" + parent + "'");
  if (c < 0) throw ValidationError("edge references unknown node '" + child + "'");
  add_edge(p, c);
}

NodeId Dag::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

NodeId Dag::at(const std::string& name) const {
  NodeId v = find(name);
  if (v < 0) throw ValidationError("unknown node '" + name + "'");
  return v;
}

std::vector<std::pair<NodeId, NodeId>> Dag::arcs() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId p = 0; p < size(); ++p)
    for (NodeId c : children_[p]) out.emplace_back(p, c);
  return out;
}

void Dag::validate() const {
  int n = size();
  if (n == 0) throw ValidationError("no nodes");

  // Kahn
  std::vector<int> indeg(n);
  for (NodeId v = 0; v < n; ++v) indeg[v] = static_cast<int>(parents_[v].size());
  std::queue<NodeId> q;
  for (NodeId v = 0; v < n; ++v)
    if (!indeg[v]) q.push(v);
  int seen = 0;
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    ++seen;
    for (NodeId c : children_[v])
      if (--indeg[c] == 0) q.push(c);
  }
  if (seen != n) throw ValidationError("graph has a directed cycle");

  std::vector<char> mark(n, 0);
  std::vector<NodeId> stack{0};
  mark[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (const auto* adj : {&parents_[v], &children_[v]})
      for (NodeId w : *adj)
        if (!mark[w]) {
          mark[w] = 1;
          ++reached;
          stack.push_back(w);
        }
  }
  if (reached != n) throw ValidationError("graph is not weakly connected");
}

Dag parse_dag(std::istream& in) {
  Dag dag;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ValidationError("line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string kw;
    if (!(ss >> kw)) continue;
    if (kw == "node") {
      std::string name, opt;
      if (!(ss >> name)) fail("node without a name");
      int states = 2;
      while (ss >> opt) {
        if (opt.rfind("states=", 0) != 0) fail("unknown node option '" + opt + "'");
        try {
          std::size_t used = 0;
          states = std::stoi(opt.substr(7), &used);
          if (used != opt.size() - 7) fail("bad state count '" + opt + "'");
        } catch (const std::logic_error&) {
          fail("bad state count '" + opt + "'");
        }
      }
      try {
        dag.add_node(name, states);
      } catch (const ValidationError& e) {
        fail(e.what());
      }
    } else if (kw == "edge") {
      std::string p, c, extra;
      if (!(ss >> p >> c)) fail("edge needs a parent and a child");
      if (ss >> extra) fail("trailing text after edge");
      try {
        dag.add_edge(p, c);
      } catch (const ValidationError& e) {
        fail(e.what());
      }
    } else {
      fail("unknown keyword '" + kw + "'");
    }
  }
  dag.validate();
  return dag;
}

Dag parse_dag_string(const std::string& text) {
  std::istringstream in(text);
  return parse_dag(in);
}

Dag load_dag(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_dag(in);
}

std::string format_dag(const Dag& dag) {
  std::ostringstream out;
  for (NodeId v = 0; v < dag.size(); ++v) out << "node " << dag.name(v) << " states=" << dag.states(v) << "\n";
  for (auto [p, c] : dag.arcs()) out << "edge " << dag.name(p) << " " << dag.name(c) << "\n";
  return out.str();
}

LayerAssignment assign_layers(const Dag& dag) {
  int n = dag.size();
  LayerAssignment la;
  la.layer.assign(n, 0);

  // sweep upwards from the leaves, raising each parent to child + 1
  std::vector<NodeId> frontier;
  for (NodeId v = 0; v < n; ++v)
    if (dag.is_leaf(v)) frontier.push_back(v);
  int sweeps = 0;
  while (!frontier.empty()) {
    if (++sweeps > n) throw ValidationError("graph has a directed cycle");
    std::vector<NodeId> next;
    for (NodeId c : frontier)
      for (NodeId p : dag.parents(c))
        if (la.layer[p] < la.layer[c] + 1) {
          la.layer[p] = la.layer[c] + 1;
          next.push_back(p);
        }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    frontier.swap(next);
  }

  la.l_max = n ? *std::max_element(la.layer.begin(), la.layer.end()) : 0;
  la.members.assign(la.l_max + 1, {});
  for (NodeId v = 0; v < n; ++v) la.members[la.layer[v]].push_back(v);
  la.own_label.assign(n, 0);
  int rank = 0;
  for (const auto& m : la.members)
    for (NodeId v : m) la.own_label[v] = ++rank;
  return la;
}

std::vector<NodeId> SameClusterMatrix::column(NodeId j) const {
  std::vector<NodeId> out;
  for (auto [a, b] : ones)
    if (b == j) out.push_back(a);
  return out;
}

std::vector<NodeId> SameClusterMatrix::row(NodeId i) const {
  std::vector<NodeId> out;
  for (auto it = ones.lower_bound({i, -1}); it != ones.end() && it->first == i; ++it) out.push_back(it->second);
  return out;
}

SameClusterMatrix same_cluster_matrix(const Dag& dag, const LayerAssignment& layers) {
  SameClusterMatrix s;
  s.n = dag.size();
  for (NodeId i = 0; i < s.n; ++i) {
    // descendants of Par(i), starting set included
    std::vector<char> in(s.n, 0);
    std::vector<NodeId> stack(dag.parents(i).begin(), dag.parents(i).end());
    for (NodeId p : stack) in[p] = 1;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId c : dag.children(v))
        if (!in[c]) {
          in[c] = 1;
          stack.push_back(c);
        }
    }
    for (NodeId j = 0; j < s.n; ++j)
      if (in[j] && layers.layer[j] >= layers.layer[i]) s.ones.insert({i, j});
  }
  return s;
}

bool is_link_node(const Dag& dag, const Mapping& mapping, NodeId v) {
  for (NodeId c : dag.children(v))
    if (mapping[c] != mapping[v]) return true;
  return false;
}

NodeClassification classify_nodes(const Dag& dag, const Mapping& mapping) {
  NodeClassification nc;
  for (NodeId v = 0; v < dag.size(); ++v) {
    auto& bucket = is_link_node(dag, mapping, v) ? nc.link : nc.internal;
    bucket[mapping[v]].push_back(v);
  }
  return nc;
}

namespace {

// some node reachable from `start` (inclusive) carries label k
bool reaches_label(const Dag& dag, const Mapping& mapping, NodeId start, int k, std::vector<char>& seen) {
  std::vector<NodeId> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    if (mapping[v] == k) return true;
    for (NodeId c : dag.children(v))
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
  }
  return false;
}

}  // namespace

bool can_join(const Dag& dag, const Mapping& mapping, NodeId v, int k) {
  std::vector<char> seen(dag.size(), 0);
  for (NodeId c : dag.children(v)) {
    if (mapping[c] == k || seen[c]) continue;
    if (reaches_label(dag, mapping, c, k, seen)) return false;
  }
  return true;
}

bool check_contiguity(const Dag& dag, const Mapping& mapping) {
  for (NodeId v = 0; v < dag.size(); ++v)
    if (!can_join(dag, mapping, v, mapping[v])) return false;
  return true;
}

BigInt search_space_size(const Dag& dag, const LayerAssignment& layers) {
  BigInt total = 1;
  for (int l = 1; l <= layers.l_max; ++l)
    for (NodeId v : layers.members[l]) total *= static_cast<unsigned>(dag.children(v).size() + 1);
  return total;
}

std::vector<int> canonical_partition(const Mapping& mapping) {
  std::map<int, int> relabel;
  std::vector<int> out(mapping.size());
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    auto [it, fresh] = relabel.try_emplace(mapping[i], static_cast<int>(relabel.size()) + 1);
    out[i] = it->second;
  }
  return out;
}

std::string partition_string(const Dag& dag, const Mapping& mapping) {
  auto canon = canonical_partition(mapping);
  int blocks = canon.empty() ? 0 : *std::max_element(canon.begin(), canon.end());
  std::string out;
  for (int b = 1; b <= blocks; ++b) {
    out += '{';
    bool first = true;
    for (NodeId v = 0; v < dag.size(); ++v)
      if (canon[v] == b) {
        if (!first) out += ',';
        out += dag.name(v);
        first = false;
      }
    out += '}';
  }
  return out;
}

Mapping parse_mapping(const Dag& dag, const std::string& text) {
  Mapping m(dag.size(), 0);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("mapping item '" + item + "' lacks '='");
    NodeId v = dag.at(item.substr(0, eq));
    int k = 0;
    try {
      k = std::stoi(item.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ValidationError("bad cluster label in '" + item + "'");
    }
    if (k <= 0) throw ValidationError("cluster labels must be positive");
    m[v] = k;
  }
  for (NodeId v = 0; v < dag.size(); ++v)
    if (!m[v]) throw ValidationError("mapping leaves '" + dag.name(v) + "' unassigned");
  return m;
}

std::string format_mapping(const Dag& dag, const Mapping& mapping) {
  std::string out;
  for (NodeId v = 0; v < dag.size(); ++v) {
    if (v) out += ',';
    out += dag.name(v) + "=" + std::to_string(mapping[v]);
  }
  return out;
}

}  // namespace dcmap
