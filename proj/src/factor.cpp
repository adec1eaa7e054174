#include "dcmap/factor.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

namespace dcmap {

Dims make_dims(std::vector<NodeId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Dims dims_union(const Dims& a, const Dims& b) {
  Dims out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Dims dims_minus(const Dims& a, const Dims& b) {
  Dims out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Dims dims_intersect(const Dims& a, const Dims& b) {
  Dims out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool dims_contains(const Dims& a, NodeId v) { return std::binary_search(a.begin(), a.end(), v); }

bool dims_meet(const Dims& a, const Dims& b) {
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return false;
}

double table_size(const Dag& dag, const Dims& d) {
  double s = 1;
  for (NodeId v : d) s *= dag.states(v);
  return s;
}

Dims cpt_scope(const Dag& dag, NodeId v) {
  Dims d = dag.parents(v);
  d.insert(std::lower_bound(d.begin(), d.end(), v), v);
  return d;
}

std::string dims_string(const Dag& dag, const Dims& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) out += ',';
    out += dag.name(d[i]);
  }
  return out;
}

void OpCostWeights::check() const {
  if (!(add > 0) || !(mul > 0) || !(div > 0)) throw std::invalid_argument("operation weights must be positive");
}

OpResult multiply_cost(const Dag& dag, const Dims* acc, const Dims& f, const OpCostWeights& w) {
  OpResult r;
  r.dims = acc ? dims_union(*acc, f) : f;
  r.cost = table_size(dag, r.dims) * w.mul;
  return r;
}

OpResult marginalize_cost(const Dag& dag, const Dims& acc, NodeId node, const OpCostWeights& w) {
  if (!dims_contains(acc, node))
    throw std::invalid_argument("marginalizing '" + dag.name(node) + "' which is not in the table");
  OpResult r;
  r.dims = dims_minus(acc, {node});
  r.cost = (dag.states(node) - 1) * table_size(dag, r.dims) * w.add;
  return r;
}

double divide_cost(const Dag& dag, const Dims& d, const OpCostWeights& w) { return table_size(dag, d) * w.div; }

void Schedule::multiply(int acc, Dims f, std::string tag) {
  steps.push_back({StepKind::Multiply, acc, std::move(f), -1, -1, std::move(tag)});
}
void Schedule::marginalize(int acc, NodeId node, std::string tag) {
  steps.push_back({StepKind::Marginalize, acc, {}, node, -1, std::move(tag)});
}
void Schedule::divide(int acc, Dims d, std::string tag) {
  steps.push_back({StepKind::Divide, acc, std::move(d), -1, -1, std::move(tag)});
}
void Schedule::copy(int dst, int src, std::string tag) {
  steps.push_back({StepKind::Copy, dst, {}, -1, src, std::move(tag)});
}

double ScheduleResult::tagged(const Schedule& s, const std::string& tag) const {
  double t = 0;
  for (std::size_t i = 0; i < s.steps.size(); ++i)
    if (s.steps[i].tag == tag) t += steps[i].cost;
  return t;
}

ScheduleError::ScheduleError(std::size_t i, const std::string& msg)
    : std::runtime_error("step " + std::to_string(i) + ": " + msg), index(i) {}

ScheduleResult eval_schedule(const Dag& dag, const Schedule& s, const OpCostWeights& w) {
  std::map<int, Dims> accs;  // absent = scalar accumulator
  ScheduleResult r;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const Step& st = s.steps[i];
    for (NodeId v : st.dims)
      if (v < 0 || v >= dag.size()) throw ScheduleError(i, "dimension out of range");
    StepCost sc;
    switch (st.kind) {
      case StepKind::Multiply: {
        auto it = accs.find(st.acc);
        auto res = multiply_cost(dag, it == accs.end() ? nullptr : &it->second, st.dims, w);
        sc.cost = res.cost;
        sc.after = accs[st.acc] = std::move(res.dims);
        break;
      }
      case StepKind::Marginalize: {
        auto it = accs.find(st.acc);
        if (it == accs.end()) throw ScheduleError(i, "marginalizing an empty accumulator");
        if (!dims_contains(it->second, st.node))
          throw ScheduleError(i, "node '" + (st.node >= 0 && st.node < dag.size() ? dag.name(st.node) : "?") +
                                     "' not in accumulator " + std::to_string(st.acc));
        auto res = marginalize_cost(dag, it->second, st.node, w);
        sc.cost = res.cost;
        sc.after = it->second = std::move(res.dims);
        break;
      }
      case StepKind::Divide:
        sc.cost = divide_cost(dag, st.dims, w);
        sc.after = accs[st.acc] = st.dims;
        break;
      case StepKind::Copy: {
        auto it = accs.find(st.src);
        if (it == accs.end()) throw ScheduleError(i, "copy from empty accumulator " + std::to_string(st.src));
        sc.after = accs[st.acc] = it->second;
        break;
      }
    }
    r.total += sc.cost;
    r.steps.push_back(std::move(sc));
  }
  return r;
}

namespace {

const char* op_name(StepKind k) {
  switch (k) {
    case StepKind::Multiply: return "multiply";
    case StepKind::Marginalize: return "marginalize";
    case StepKind::Divide: return "divide";
    case StepKind::Copy: return "copy";
  }
  return "?";
}

std::string fmt(double v, bool precise) {
  char buf[64];
  std::snprintf(buf, sizeof buf, precise ? "%.17g" : "%.1f", v);
  return buf;
}

}  // namespace

void write_schedule_tsv(std::ostream& out, const Dag& dag, const Schedule& s, const ScheduleResult& r,
                        bool precise) {
  out << "step_index\top\taccumulator_id\tdims\tcost\n";
  for (std::size_t i = 0; i < s.steps.size(); ++i)
    out << i << '\t' << op_name(s.steps[i].kind) << '\t' << s.steps[i].acc << '\t'
        << dims_string(dag, r.steps[i].after) << '\t' << fmt(r.steps[i].cost, precise) << '\n';
}

Schedule bucket_elimination_schedule(const Dag& dag, NodeId target, const std::vector<NodeId>& order) {
  std::vector<char> used(dag.size(), 0);
  Schedule s;
  auto absorb = [&](NodeId v, const std::string& tag) {
    for (NodeId x = 0; x < dag.size(); ++x)
      if (!used[x] && dims_contains(cpt_scope(dag, x), v)) {
        used[x] = 1;
        s.multiply(0, cpt_scope(dag, x), tag);
      }
  };
  for (NodeId v : order) {
    if (v == target) throw std::invalid_argument("elimination order contains the target");
    absorb(v, dag.name(v));
    s.marginalize(0, v, dag.name(v));
  }
  absorb(target, dag.name(target));
  return s;
}

std::vector<NodeId> default_elimination_order(const Dag&, const LayerAssignment& layers, NodeId target) {
  std::vector<NodeId> order;
  for (const auto& m : layers.members)
    for (auto it = m.rbegin(); it != m.rend(); ++it)
      if (*it != target) order.push_back(*it);
  return order;
}

Schedule jointree_fixture_schedule(const Dag& dag) {
  NodeId A = dag.at("A"), B = dag.at("B"), C = dag.at("C"), D = dag.at("D"), E = dag.at("E"), F = dag.at("F"),
         G = dag.at("G");
  enum { AF = 0, ABD, CE, DEG, TMP };
  const Dims clique[4] = {make_dims({A, F}), make_dims({A, B, D}), make_dims({C, E}), make_dims({D, E, G})};
  Schedule s;
  auto cpt = [&](NodeId v) { return cpt_scope(dag, v); };

  // the reference accounting charges no separate multiply for P(B)
  s.multiply(AF, cpt(A), "init");
  s.multiply(AF, cpt(F), "init");
  s.multiply(ABD, cpt(D), "init");
  s.multiply(CE, cpt(C), "init");
  s.multiply(CE, cpt(E), "init");
  s.multiply(DEG, cpt(G), "init");

  // project src onto the sepset, divide by the stored sepset, absorb
  auto pass = [&](int src, int dst, const Dims& sep) {
    s.copy(TMP, src, "propagate");
    for (NodeId v : dims_minus(clique[src], sep)) s.marginalize(TMP, v, "propagate");
    s.divide(TMP, sep, "propagate");
    s.multiply(dst, clique[dst], "propagate");
  };
  pass(AF, ABD, {A});
  pass(CE, DEG, {E});
  pass(ABD, DEG, {D});
  pass(DEG, ABD, {D});
  pass(ABD, AF, {A});
  pass(DEG, CE, {E});

  int next = TMP + 1;
  auto marginal = [&](int clique, std::initializer_list<NodeId> out) {
    s.copy(next, clique, "marginal");
    for (NodeId v : out) s.marginalize(next, v, "marginal");
    ++next;
  };
  marginal(AF, {F});
  marginal(AF, {A});
  marginal(CE, {E});
  marginal(CE, {C});
  // B, D, G: one summation out of the three-way clique each
  marginal(ABD, {A});
  marginal(ABD, {B});
  marginal(DEG, {E});
  return s;
}

namespace {

struct InferenceBuilder {
  const Dag& dag;
  const LayerAssignment& layers;
  const Mapping& u;
  Schedule s;
  int next_acc = 0;

  struct Part {
    int k = 0, l = 0;
    Dims Z;
    int fold_into = -1;           // index of target when folded
    std::vector<int> folded;      // ids folded into this one
    int fwd = -1, bwd = -1;       // accumulators
    Dims fwd_dims, bwd_dims;
    bool needs_bwd = true;
  };
  std::vector<Part> parts;
  std::map<std::pair<int, int>, int> index;  // (k,l) -> part
  std::vector<int> part_of;                  // node -> part
  std::vector<int> producer;                 // node -> accumulator holding its forward message
  std::vector<Dims> producer_dims;

  InferenceBuilder(const Dag& d, const LayerAssignment& la, const Mapping& m) : dag(d), layers(la), u(m) {}

  int fresh() { return next_acc++; }

  int group_of(int p) const { return parts[p].fold_into >= 0 ? parts[p].fold_into : p; }

  Dims group_nodes(int g) const {
    Dims all = parts[g].Z;
    for (int f : parts[g].folded) all = dims_union(all, parts[f].Z);
    return all;
  }

  // copy src, sum out everything outside keep; returns new accumulator
  int restrict_to(int src, const Dims& src_dims, const Dims& keep, Dims& out, const std::string& tag) {
    int a = fresh();
    s.copy(a, src, tag);
    for (NodeId v : dims_minus(src_dims, keep)) s.marginalize(a, v, tag);
    out = dims_intersect(src_dims, keep);
    return a;
  }

  // load the messages smallest first into a fresh accumulator
  int load(std::vector<Dims> msgs, Dims& acc_dims, const std::string& tag) {
    std::sort(msgs.begin(), msgs.end(),
              [&](const Dims& a, const Dims& b) {
                double sa = table_size(dag, a), sb = table_size(dag, b);
                return sa != sb ? sa < sb : a < b;
              });
    int a = fresh();
    acc_dims.clear();
    for (auto& m : msgs) {
      s.multiply(a, m, tag);
      acc_dims = dims_union(acc_dims, m);
    }
    return a;
  }

  void build_parts() {
    part_of.assign(dag.size(), -1);
    for (int l = 0; l <= layers.l_max; ++l) {
      std::map<int, Dims> by_k;
      for (NodeId v : layers.members[l]) by_k[u[v]].push_back(v);
      for (auto& [k, Z] : by_k) {
        index[{k, l}] = static_cast<int>(parts.size());
        for (NodeId v : Z) part_of[v] = static_cast<int>(parts.size());
        Part part;
        part.k = k;
        part.l = l;
        part.Z = Z;
        parts.push_back(std::move(part));
      }
    }
    // root-only cluster-layers fold into the highest lower layer of their cluster
    for (int p = 0; p < static_cast<int>(parts.size()); ++p) {
      bool roots = std::all_of(parts[p].Z.begin(), parts[p].Z.end(), [&](NodeId v) { return dag.is_root(v); });
      if (!roots) continue;
      int target = -1;
      for (int l = parts[p].l - 1; l >= 0 && target < 0; --l)
        if (auto it = index.find({parts[p].k, l}); it != index.end()) target = it->second;
      if (target < 0) continue;
      while (parts[target].fold_into >= 0) target = parts[target].fold_into;
      parts[p].fold_into = target;
      parts[target].folded.push_back(p);
    }
  }

  void forward() {
    producer.assign(dag.size(), -1);
    producer_dims.assign(dag.size(), {});
    std::vector<int> groups;
    for (int p = 0; p < static_cast<int>(parts.size()); ++p)
      if (parts[p].fold_into < 0) groups.push_back(p);
    auto top_layer = [&](int g) {
      int l = parts[g].l;
      for (int f : parts[g].folded) l = std::max(l, parts[f].l);
      return l;
    };
    auto outside_parents = [&](int g) {
      Dims mine = group_nodes(g), par;
      for (NodeId v : mine) par = dims_union(par, dag.parents(v));
      return dims_minus(par, mine);
    };
    std::vector<char> done(parts.size(), 0);
    for (std::size_t round = 0; round < groups.size(); ++round) {
      int best = -1;
      bool best_ready = false;
      for (int g : groups) {
        if (done[g]) continue;
        Dims par = outside_parents(g);
        bool ready = std::all_of(par.begin(), par.end(), [&](NodeId v) { return producer[v] >= 0; });
        auto key = [&](int x) { return std::make_pair(-top_layer(x), parts[x].k); };
        if (best < 0 || (ready && !best_ready) || (ready == best_ready && key(g) < key(best))) {
          best = g;
          best_ready = ready;
        }
      }
      forward_group(best);
      done[best] = 1;
    }
  }

  void forward_group(int g) {
    Part& P = parts[g];
    std::string tag = "fwd " + std::to_string(P.k) + " " + std::to_string(P.l);
    Dims mine = group_nodes(g);
    std::set<int> srcs;
    std::vector<Dims> msgs;
    for (NodeId v : mine)
      for (NodeId p : dag.parents(v))
        if (!dims_contains(mine, p) && producer[p] >= 0 && srcs.insert(producer[p]).second)
          msgs.push_back(producer_dims[p]);
    Dims acc;
    int a = load(msgs, acc, tag);
    std::vector<NodeId> folded_nodes;
    for (int f : P.folded) folded_nodes.insert(folded_nodes.end(), parts[f].Z.begin(), parts[f].Z.end());
    std::sort(folded_nodes.begin(), folded_nodes.end());
    for (NodeId v : P.Z) {
      s.multiply(a, cpt_scope(dag, v), tag);
      acc = dims_union(acc, cpt_scope(dag, v));
    }
    for (NodeId v : folded_nodes) {
      s.multiply(a, cpt_scope(dag, v), tag);
      acc = dims_union(acc, cpt_scope(dag, v));
    }
    for (NodeId v : Dims(acc)) {
      if (dims_contains(P.Z, v) || dims_contains(make_dims(folded_nodes), v)) continue;
      if (u[v] == P.k && is_link_node(dag, u, v)) continue;
      s.marginalize(a, v, tag);
      acc = dims_minus(acc, {v});
    }
    P.fwd = a;
    P.fwd_dims = acc;
    for (NodeId v : P.Z) {
      producer[v] = a;
      producer_dims[v] = acc;
    }
    // folded roots feeding other groups get their own summed-down message
    Dims needed;
    for (NodeId v : folded_nodes)
      for (NodeId c : dag.children(v))
        if (!dims_contains(mine, c)) needed = dims_union(needed, {v});
    if (!needed.empty()) {
      Dims out;
      int m = restrict_to(a, acc, needed, out, tag);
      for (NodeId v : needed) {
        producer[v] = m;
        producer_dims[v] = out;
      }
    }
  }

  // same rule as the search transition cost
  void backward() {
    for (int p = 0; p < static_cast<int>(parts.size()); ++p) {
      Part& P = parts[p];
      if (P.fold_into >= 0) {
        P.needs_bwd = false;
        continue;
      }
      if (!P.folded.empty()) {
        Dims mine = group_nodes(p);
        bool wanted = false;
        for (NodeId v : P.Z)
          for (NodeId q : dag.parents(v))
            if (!dims_contains(mine, q)) wanted = true;
        P.needs_bwd = wanted;
      }
    }
    for (int p = 0; p < static_cast<int>(parts.size()); ++p) {
      Part& P = parts[p];
      if (!P.needs_bwd) continue;
      std::string tag = "bwd " + std::to_string(P.k) + " " + std::to_string(P.l);
      std::vector<Dims> msgs;
      for (int q = 0; q < p; ++q) {
        const Part& Q = parts[q];
        if (Q.bwd < 0 || Q.l >= P.l || !dims_meet(Q.bwd_dims, P.Z)) continue;
        Dims out;
        restrict_to(Q.bwd, Q.bwd_dims, P.Z, out, tag);
        msgs.push_back(out);
      }
      Dims acc;
      int a = load(msgs, acc, tag);
      for (NodeId v : P.Z) {
        s.multiply(a, cpt_scope(dag, v), tag);
        acc = dims_union(acc, cpt_scope(dag, v));
      }
      for (NodeId v : P.Z)
        if (!is_link_node(dag, u, v)) {
          s.marginalize(a, v, tag);
          acc = dims_minus(acc, {v});
        }
      P.bwd = a;
      P.bwd_dims = acc;
    }
  }

  // restricted backward messages from the parts holding children of `nodes`
  std::vector<Dims> child_messages(const Dims& nodes, const Dims& exclude, const std::string& tag) {
    std::set<int> from;
    for (NodeId v : nodes)
      for (NodeId c : dag.children(v))
        if (!dims_contains(exclude, c)) from.insert(part_of[c]);
    std::vector<Dims> msgs;
    for (int q : from) {
      const Part& Q = parts[q];
      if (Q.bwd < 0 || !dims_meet(Q.bwd_dims, exclude)) continue;
      Dims out;
      restrict_to(Q.bwd, Q.bwd_dims, exclude, out, tag);
      msgs.push_back(out);
    }
    return msgs;
  }

  void marginals(int src, const Dims& src_dims, const Dims& nodes) {
    for (NodeId v : nodes) {
      Dims out;
      restrict_to(src, src_dims, {v}, out, "post");
    }
  }

  void absorb_and_marginalize(int fwd, const Dims& fwd_dims, const Dims& scope, const Dims& nodes) {
    auto msgs = child_messages(nodes, scope, "post");
    int a;
    Dims acc;
    if (msgs.empty()) {
      a = fresh();
      s.copy(a, fwd, "post");
      acc = fwd_dims;
    } else {
      a = load(msgs, acc, "post");
      s.multiply(a, fwd_dims, "post");
      acc = dims_union(acc, fwd_dims);
    }
    marginals(a, acc, nodes);
  }

  void posteriors() {
    for (int p = 0; p < static_cast<int>(parts.size()); ++p) {
      Part& P = parts[p];
      if (P.fold_into >= 0) continue;
      if (!P.folded.empty()) {
        Dims mine = group_nodes(p);
        absorb_and_marginalize(P.fwd, P.fwd_dims, mine, mine);
        continue;
      }
      Dims middle;
      for (NodeId v : P.Z) {
        if (dag.is_leaf(v)) {
          marginals(P.fwd, P.fwd_dims, {v});
        } else if (dag.is_root(v) && dims_contains(P.bwd_dims, v)) {
          marginals(P.bwd, P.bwd_dims, {v});
        } else {
          middle.push_back(v);
        }
      }
      if (!middle.empty()) absorb_and_marginalize(P.fwd, P.fwd_dims, P.Z, middle);
    }
  }
};

}  // namespace

Schedule cluster_inference_schedule(const Dag& dag, const LayerAssignment& layers, const Mapping& mapping) {
  if (static_cast<int>(mapping.size()) != dag.size()) throw std::invalid_argument("mapping size mismatch");
  for (int k : mapping)
    if (k <= 0) throw std::invalid_argument("mapping leaves a node unassigned");
  if (!check_contiguity(dag, mapping)) throw std::invalid_argument("mapping is not contiguous");
  InferenceBuilder b(dag, layers, mapping);
  b.build_parts();
  b.forward();
  b.backward();
  b.posteriors();
  return std::move(b.s);
}

double cluster_inference_cost(const Dag& dag, const Mapping& mapping, const LayerAssignment& layers,
                              const OpCostWeights& w) {
  return eval_schedule(dag, cluster_inference_schedule(dag, layers, mapping), w).total;
}

}  // namespace dcmap
