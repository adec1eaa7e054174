#include "dcmap/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace dcmap {

SearchConfig SearchConfig::enumeration() {
  SearchConfig c;
  c.prune = false;
  c.gmin_infinite = true;
  return c;
}

void SearchConfig::check() const {
  if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (max_iterations && *max_iterations <= 0) throw std::invalid_argument("max iterations must be positive");
  if (stall_window && *stall_window <= 0) throw std::invalid_argument("stall window must be positive");
}

std::vector<Mapping> SearchReport::optimal_mappings() const {
  std::vector<Mapping> out;
  std::set<std::vector<int>> seen;
  for (const auto& s : solutions)
    if (s.optimal && seen.insert(canonical_partition(s.u)).second) out.push_back(s.u);
  return out;
}

namespace {

constexpr double kTol = 1e-9;

using Key = std::pair<int, int>;  // (cluster, layer)

struct Branch {
  Mapping u;
  std::map<Key, Dims> proposals;
  std::set<Key> popped;
  std::map<Key, long> entry_of;  // live queue entries
  std::vector<Partial> partials;
  std::vector<double> g;       // per-layer increments
  std::vector<double> cum_at;  // cumulative cost when layer completed
  std::vector<int> group;      // link group per completed layer
  double cum = 0;
  int progress = 0;  // |Br_pl|
  bool active = true;
  bool alive = true;
  bool complete = false;
};

struct Entry {
  int b, k, l;
  double ghat;
};

enum class Where { Eligible, Waiting, Inactive };

class Engine {
 public:
  Engine(const Dag& dag, const LayerAssignment& layers, const CostModel& model, const SearchConfig& cfg,
         const SolutionCallback& on_solution, const IterationHook& on_iteration)
      : dag_(dag),
        layers_(layers),
        model_(model),
        cfg_(cfg),
        on_solution_(on_solution),
        on_iteration_(on_iteration),
        s_(same_cluster_matrix(dag, layers)),
        rng_(cfg.seed) {}

  SearchReport run() {
    init();
    long last_improve = 0;
    double last_gmin = gmin_;
    while (true) {
      if (cfg_.max_iterations && iteration_ >= *cfg_.max_iterations) {
        report_.terminated_early = has_work();
        break;
      }
      if (cfg_.stall_window && iteration_ - last_improve >= *cfg_.stall_window) {
        report_.terminated_early = has_work();
        break;
      }
      if (!has_work()) break;
      ++iteration_;
      IterationInfo info;
      info.iteration = iteration_;
      if (eligible_.empty()) {
        activate(info);
      } else {
        pop(info);
      }
      info.gmin = gmin_;
      if (gmin_ < last_gmin - kTol) {
        last_gmin = gmin_;
        last_improve = iteration_;
      }
      if (on_iteration_) on_iteration_(info);
    }
    finish();
    return std::move(report_);
  }

 private:
  const Dag& dag_;
  const LayerAssignment& layers_;
  const CostModel& model_;
  const SearchConfig& cfg_;
  const SolutionCallback& on_solution_;
  const IterationHook& on_iteration_;
  SameClusterMatrix s_;
  std::mt19937_64 rng_;

  std::vector<Branch> branches_;
  std::unordered_map<long, Entry> entries_;
  std::unordered_map<long, Where> where_;
  std::set<std::pair<double, long>> eligible_;
  std::set<std::pair<double, long>> inactive_by_ghat_;
  std::set<std::pair<int, long>> inactive_by_layer_;
  long next_seq_ = 0;
  long iteration_ = 0;
  double gmin_ = std::numeric_limits<double>::infinity();

  std::map<std::pair<int, std::vector<int>>, int> group_ids_;
  std::vector<std::vector<int>> group_members_;

  SearchReport report_;

  bool has_work() const { return !eligible_.empty() || !inactive_by_ghat_.empty(); }

  BranchView view(const Branch& b) const { return {b.u, b.partials}; }

  void init() {
    Branch root;
    root.u.assign(dag_.size(), 0);
    root.g.assign(layers_.l_max + 1, 0);
    root.cum_at.assign(layers_.l_max + 1, 0);
    root.group.assign(layers_.l_max + 1, -1);
    for (NodeId v : layers_.members[0]) {
      int k = layers_.own_label[v];
      if (cfg_.leaf_init) {
        k = (*cfg_.leaf_init)[v];
        if (k <= 0) throw std::invalid_argument("leaf_init leaves '" + dag_.name(v) + "' without a label");
      }
      root.proposals[{k, 0}].push_back(v);
    }
    branches_.push_back(std::move(root));
    report_.branches_created = 1;
    double h0 = model_.heuristic_remaining(view(branches_[0]));
    for (auto& [key, nodes] : branches_[0].proposals) {
      std::sort(nodes.begin(), nodes.end());
      push_entry(0, key.first, key.second, h0);
    }
    if (!cfg_.gmin_infinite) {
      Mapping single(layers_.own_label.begin(), layers_.own_label.end());
      gmin_ = std::max(h0, evaluate_mapping(dag_, layers_, model_, single));
    }
  }

  Where classify(const Branch& b, const Entry& e) const {
    if (!b.active) return Where::Inactive;
    return b.progress >= e.l ? Where::Eligible : Where::Waiting;
  }

  void file(long seq) {
    const Entry& e = entries_.at(seq);
    Where w = classify(branches_[e.b], e);
    where_[seq] = w;
    if (w == Where::Eligible) eligible_.insert({e.ghat, seq});
    if (w == Where::Inactive) {
      inactive_by_ghat_.insert({e.ghat, seq});
      inactive_by_layer_.insert({e.l, seq});
    }
  }

  void unfile(long seq) {
    const Entry& e = entries_.at(seq);
    switch (where_.at(seq)) {
      case Where::Eligible: eligible_.erase({e.ghat, seq}); break;
      case Where::Inactive:
        inactive_by_ghat_.erase({e.ghat, seq});
        inactive_by_layer_.erase({e.l, seq});
        break;
      case Where::Waiting: break;
    }
  }

  void refile(int b) {
    for (auto& [key, seq] : branches_[b].entry_of) {
      unfile(seq);
      file(seq);
    }
  }

  void push_entry(int b, int k, int l, double ghat) {
    long seq = next_seq_++;
    entries_[seq] = {b, k, l, ghat};
    branches_[b].entry_of[{k, l}] = seq;
    file(seq);
  }

  void drop_entry(long seq) {
    unfile(seq);
    const Entry& e = entries_.at(seq);
    branches_[e.b].entry_of.erase({e.k, e.l});
    where_.erase(seq);
    entries_.erase(seq);
  }

  void kill(int b) {
    Branch& br = branches_[b];
    if (!br.alive) return;
    br.alive = false;
    std::vector<long> seqs;
    for (auto& [key, seq] : br.entry_of) seqs.push_back(seq);
    for (long seq : seqs) drop_entry(seq);
    ++report_.branches_pruned;
  }

  void activate(IterationInfo& info) {
    info.activation = true;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    long seq = coin(rng_) < cfg_.alpha ? inactive_by_ghat_.begin()->second : inactive_by_layer_.begin()->second;
    int b = entries_.at(seq).b;
    info.branch = b;
    branches_[b].active = true;
    refile(b);
  }

  bool alternative(const Branch& br, NodeId x, int k, int l) const {
    for (const auto& [key, nodes] : br.proposals) {
      if (key.second != l || key.first == k || br.popped.count(key)) continue;
      if (std::binary_search(nodes.begin(), nodes.end(), x) && can_join(dag_, br.u, x, key.first)) return true;
    }
    return false;
  }

  // Returns true when the popped branch survives.
  bool prune_at(int b, int l, IterationInfo& info) {
    if (!cfg_.prune) return true;
    if (l >= 1) {
      int g = branches_[b].group[l - 1];
      if (g >= 0) {
        double best = std::numeric_limits<double>::infinity();
        for (int m : group_members_[g])
          if (branches_[m].alive) best = std::min(best, branches_[m].cum_at[l - 1]);
        for (int m : group_members_[g])
          if (branches_[m].alive && branches_[m].cum_at[l - 1] > best + kTol) kill(m);
      }
    }
    if (branches_[b].alive && branches_[b].cum > gmin_ + kTol) kill(b);
    info.branch_pruned = !branches_[b].alive;
    return branches_[b].alive;
  }

  std::vector<Dims> combos_for(const Branch& br, int k, int l) const {
    Dims z1, z2;
    auto it = br.proposals.find({k, l});
    for (NodeId x : it->second) {
      if (br.u[x]) continue;  // Z3: already placed elsewhere
      if (!can_join(dag_, br.u, x, k)) continue;
      (alternative(br, x, k, l) ? z2 : z1).push_back(x);
    }
    std::vector<Dims> out;
    if (z2.size() > 20) throw std::runtime_error("too many free nodes in one cluster-layer proposal");
    for (unsigned mask = 1; mask < (1u << z2.size()); ++mask) {
      Dims c = z1;
      for (std::size_t i = 0; i < z2.size(); ++i)
        if (mask & (1u << i)) c.push_back(z2[i]);
      out.push_back(make_dims(std::move(c)));
    }
    out.push_back(z1);
    if (cfg_.root_split_filter) {
      std::vector<Dims> kept;
      for (auto& c : out)
        if (count_roots(dag_, c) < 2) kept.push_back(c);
      if (!kept.empty()) out.swap(kept);
    }
    return out;
  }

  void pop(IterationInfo& info) {
    long seq = eligible_.begin()->second;
    Entry e = entries_.at(seq);
    drop_entry(seq);
    int b = e.b;
    info.branch = b;
    info.branch_was_alive = branches_[b].alive;
    if (!prune_at(b, e.l, info)) return;

    auto combos = combos_for(branches_[b], e.k, e.l);
    branches_[b].popped.insert({e.k, e.l});

    // siblings first, copied from the untouched parent state
    std::vector<int> targets{b};
    for (std::size_t i = 1; i < combos.size(); ++i) {
      Branch copy = branches_[b];
      copy.entry_of.clear();
      copy.active = false;
      int nb = static_cast<int>(branches_.size());
      branches_.push_back(std::move(copy));
      ++report_.branches_created;
      for (int l = 0; l <= layers_.l_max; ++l)
        if (int g = branches_[nb].group[l]; g >= 0) group_members_[g].push_back(nb);
      for (auto& [key, s] : branches_[b].entry_of) push_entry(nb, key.first, key.second, entries_.at(s).ghat);
      targets.push_back(nb);
    }
    for (std::size_t i = 0; i < combos.size(); ++i) apply(targets[i], e.k, e.l, combos[i]);
  }

  void apply(int b, int k, int l, const Dims& combo) {
    if (!combo.empty()) {
      Branch& br = branches_[b];
      for (NodeId x : combo) br.u[x] = k;
      Transition t = model_.transition_cost(view(br), k, l, combo);
      if (!(t.cost > 0)) throw std::logic_error("cost model returned a non-positive transition cost");
      br.g[l] += t.cost;
      br.cum += t.cost;
      br.partials.push_back({k, l, std::move(t.dims)});

      std::set<Key> touched;
      for (NodeId x : combo)
        for (NodeId p : dag_.parents(x)) {
          int lp = layers_.layer[p];
          if (s_.at(x, p)) touched.insert(add_proposal(br, k, lp, p));
          touched.insert(add_proposal(br, layers_.own_label[p], lp, p));
        }
      double gh = 0;
      bool need = false;
      for (const Key& key : touched)
        if (!br.entry_of.count(key) && !br.popped.count(key)) need = true;
      if (need) gh = ghat(br.cum, 0, model_.heuristic_remaining(view(br))).total();
      for (const Key& key : touched)
        if (!br.entry_of.count(key) && !br.popped.count(key)) push_entry(b, key.first, key.second, gh);
    }
    Branch& br = branches_[b];
    bool done = std::all_of(layers_.members[l].begin(), layers_.members[l].end(), [&](NodeId v) { return br.u[v]; });
    if (done && br.progress <= l) complete_layer(b, l);
  }

  Key add_proposal(Branch& br, int k, int l, NodeId p) {
    Dims& nodes = br.proposals[{k, l}];
    auto pos = std::lower_bound(nodes.begin(), nodes.end(), p);
    if (pos == nodes.end() || *pos != p) nodes.insert(pos, p);
    return {k, l};
  }

  std::vector<int> signature(const Branch& br) const {
    std::vector<int> sig;
    int n = dag_.size();
    for (NodeId x = 0; x < n; ++x) {
      if (!br.u[x]) continue;
      bool frontier = false;
      for (NodeId p : dag_.parents(x))
        if (!br.u[p]) frontier = true;
      if (!frontier) continue;
      std::set<int> labels;
      std::vector<NodeId> stack{x};
      std::vector<char> seen(n, 0);
      seen[x] = 1;
      while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        labels.insert(br.u[v]);
        for (NodeId c : dag_.children(v))
          if (!seen[c]) {
            seen[c] = 1;
            stack.push_back(c);
          }
      }
      sig.push_back(x);
      sig.push_back(br.u[x]);
      sig.push_back(static_cast<int>(labels.size()));
      sig.insert(sig.end(), labels.begin(), labels.end());
    }
    sig.push_back(-1);
    std::vector<Dims> open;
    for (const Partial& p : br.partials)
      if (std::any_of(p.dims.begin(), p.dims.end(), [&](NodeId v) { return !br.u[v]; })) open.push_back(p.dims);
    std::sort(open.begin(), open.end());
    for (const Dims& d : open) {
      sig.push_back(static_cast<int>(d.size()));
      sig.insert(sig.end(), d.begin(), d.end());
    }
    return sig;
  }

  void complete_layer(int b, int l) {
    Branch& br = branches_[b];
    br.progress = l + 1;
    br.cum_at[l] = br.cum;
    std::vector<long> stale;
    for (auto& [key, seq] : br.entry_of)
      if (key.second == l) stale.push_back(seq);
    for (long seq : stale) drop_entry(seq);

    if (l == layers_.l_max) {
      br.complete = true;
      gmin_ = std::min(gmin_, br.cum);
      SolutionRecord rec{br.u, br.cum, gmin_, iteration_, b, false};
      report_.solutions.push_back(rec);
      if (on_solution_) on_solution_(rec);
      return;
    }
    auto [it, fresh] = group_ids_.try_emplace({l, signature(br)}, static_cast<int>(group_members_.size()));
    if (fresh) group_members_.emplace_back();
    br.group[l] = it->second;
    group_members_[it->second].push_back(b);
    refile(b);
  }

  void finish() {
    report_.iterations_total = iteration_;
    report_.branches_complete = report_.solutions.size();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : report_.solutions) best = std::min(best, s.total_cost);
    report_.optimal_cost = best;
    std::set<std::vector<int>> parts;
    long first = 0;
    for (auto& s : report_.solutions)
      if (s.total_cost <= best + kTol) {
        s.optimal = true;
        parts.insert(canonical_partition(s.u));
        if (!first) first = s.iteration;
      }
    report_.optimal_solution_count = parts.size();
    report_.iteration_of_first_optimal = first;
  }
};

}  // namespace

SearchReport run_search(const Dag& dag, const LayerAssignment& layers, const CostModel& model,
                        const SearchConfig& config, const SolutionCallback& on_solution,
                        const IterationHook& on_iteration) {
  config.check();
  Engine e(dag, layers, model, config, on_solution, on_iteration);
  return e.run();
}

}  // namespace dcmap
