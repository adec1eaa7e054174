#include "dcmap/compare.hpp"
#include "dcmap/cost_model.hpp"
#include "dcmap/dag.hpp"
#include "dcmap/factor.hpp"
#include "dcmap/generator.hpp"
#include "dcmap/oracle.hpp"
#include "dcmap/search.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace dcmap;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kValidation = 2, kCap = 3, kConfig = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v, bool precise) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, precise ? "%.17g" : "%.1f", v);
  return buf;
}

json num(double v, bool precise) {
  if (!std::isfinite(v)) return nullptr;
  return precise ? v : std::round(v * 10) / 10;
}

struct Common {
  std::string file;
  std::string cost = "bn";
  OpCostWeights w;
  bool precise = false;
};

void add_weights(CLI::App* sub, Common& c) {
  sub->add_option("--cost", c.cost, "cost model")->capture_default_str();
  sub->add_option("--w-add", c.w.add, "addition weight")->capture_default_str();
  sub->add_option("--w-mul", c.w.mul, "multiplication weight")->capture_default_str();
  sub->add_option("--w-div", c.w.div, "division weight")->capture_default_str();
  sub->add_flag("--precise", c.precise, "full precision output");
}

std::unique_ptr<CostModel> model_for(const Common& c, const Dag& dag, const LayerAssignment& la) {
  try {
    c.w.check();
    return make_cost_model(c.cost, dag, la, c.w);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json config_echo(const Common& c) {
  return {{"cost", c.cost}, {"w_add", c.w.add}, {"w_mul", c.w.mul}, {"w_div", c.w.div}, {"precise", c.precise}};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// --- layers ---------------------------------------------------------------

int cmd_layers(const Common& c, std::ostream& out, json& echo) {
  Dag dag = load_dag(c.file);
  auto la = assign_layers(dag);
  out << "node\tlayer\n";
  for (NodeId v = 0; v < dag.size(); ++v) out << dag.name(v) << '\t' << la.layer[v] << '\n';
  echo["l_max"] = la.l_max;
  return kOk;
}

// --- search ---------------------------------------------------------------

struct SearchArgs {
  double alpha = 0.5;
  std::uint64_t seed = 1;
  long max_iters = 0;
  long stall = 0;
  bool no_prune = false;
  bool gmin_inf = false;
  bool root_split = false;
  std::string reference;
  std::string format = "tsv";
};

std::vector<CoMembershipMatrix> reference_set(const std::string& ref, const Dag& dag, const LayerAssignment& la,
                                              const CostModel& model) {
  std::vector<CoMembershipMatrix> ys;
  if (ref == "oracle") {
    for (const auto& m : optimal_set(dag, la, model).mappings) ys.emplace_back(m.u);
  } else {
    for (const auto& item : split(ref, ';')) ys.emplace_back(parse_mapping(dag, item));
  }
  return ys;
}

int cmd_search(const Common& c, const SearchArgs& a, std::ostream& out, json& echo) {
  Dag dag = load_dag(c.file);
  auto la = assign_layers(dag);
  auto model = model_for(c, dag, la);
  SearchConfig cfg;
  cfg.alpha = a.alpha;
  cfg.seed = a.seed;
  if (a.max_iters) cfg.max_iterations = a.max_iters;
  if (a.stall) cfg.stall_window = a.stall;
  cfg.prune = !a.no_prune;
  cfg.gmin_infinite = a.gmin_inf;
  cfg.root_split_filter = a.root_split;
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (a.format != "tsv" && a.format != "json") throw ConfigError("--format must be tsv or json");
  echo["alpha"] = a.alpha;
  echo["seed"] = a.seed;
  echo["max_iters"] = a.max_iters;
  echo["stall"] = a.stall;
  echo["prune"] = cfg.prune;
  echo["gmin_infinite"] = cfg.gmin_infinite;
  echo["root_split_filter"] = cfg.root_split_filter;
  echo["reference"] = a.reference;

  std::vector<CoMembershipMatrix> ref;
  if (!a.reference.empty()) ref = reference_set(a.reference, dag, la, *model);

  bool tsv = a.format == "tsv";
  json sols = json::array();
  if (tsv) out << "iteration\tbranch\ttotal_cost\tgmin\tmapping\tsimilarity\n";
  auto emit = [&](const SolutionRecord& s) {
    std::optional<double> sim;
    if (!ref.empty()) sim = similarity(CoMembershipMatrix(s.u), ref);
    if (tsv) {
      out << s.iteration << '\t' << s.branch << '\t' << fmt(s.total_cost, c.precise) << '\t'
          << fmt(s.gmin, c.precise) << '\t' << format_mapping(dag, s.u) << '\t'
          << (sim ? fmt(*sim, true) : std::string("-")) << '\n';
    } else {
      json m = json::object();
      for (NodeId v = 0; v < dag.size(); ++v) m[dag.name(v)] = s.u[v];
      sols.push_back({{"iteration", s.iteration},
                      {"branch", s.branch},
                      {"total_cost", num(s.total_cost, c.precise)},
                      {"gmin", num(s.gmin, c.precise)},
                      {"mapping", m},
                      {"similarity", sim ? json(*sim) : json(nullptr)}});
    }
  };
  auto rep = run_search(dag, la, *model, cfg, emit);

  std::vector<std::string> parts;
  for (const auto& m : rep.optimal_mappings()) parts.push_back(partition_string(dag, m));
  if (tsv) {
    out << '\n';
    out << "optimal_cost\t" << fmt(rep.optimal_cost, c.precise) << '\n';
    out << "optimal_solution_count\t" << rep.optimal_solution_count << '\n';
    out << "iterations_total\t" << rep.iterations_total << '\n';
    out << "iteration_of_first_optimal\t" << rep.iteration_of_first_optimal << '\n';
    out << "branches_complete\t" << rep.branches_complete << '\n';
    out << "terminated_early\t" << (rep.terminated_early ? "true" : "false") << '\n';
    for (const auto& p : parts) out << "optimal_partition\t" << p << '\n';
  } else {
    json report = {{"optimal_cost", num(rep.optimal_cost, c.precise)},
                   {"optimal_solution_count", rep.optimal_solution_count},
                   {"iterations_total", rep.iterations_total},
                   {"iteration_of_first_optimal", rep.iteration_of_first_optimal},
                   {"branches_complete", rep.branches_complete},
                   {"terminated_early", rep.terminated_early},
                   {"optimal_partition", parts}};
    out << json{{"solutions", sols}, {"report", report}}.dump(2) << '\n';
  }
  return kOk;
}

// --- oracle ---------------------------------------------------------------

int cmd_oracle(const Common& c, const std::string& cap_text, bool all, std::ostream& out, json& echo) {
  Dag dag = load_dag(c.file);
  auto la = assign_layers(dag);
  auto model = model_for(c, dag, la);
  BigInt cap;
  try {
    cap = BigInt(cap_text);
  } catch (const std::exception&) {
    throw ConfigError("bad --cap value '" + cap_text + "'");
  }
  echo["cap"] = cap_text;
  echo["all"] = all;
  out << "cost\tpartition\tmapping\n";
  if (all) {
    std::vector<std::pair<double, Mapping>> rows;
    for_each_feasible(
        dag, la, [&](const Mapping& u) { rows.emplace_back(evaluate_mapping(dag, la, *model, u), u); }, cap);
    std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [cost, u] : rows)
      out << fmt(cost, c.precise) << '\t' << partition_string(dag, u) << '\t' << format_mapping(dag, u) << '\n';
    return kOk;
  }
  auto best = optimal_set(dag, la, *model, cap);
  for (const auto& m : best.mappings)
    out << fmt(m.total_cost, c.precise) << '\t' << partition_string(dag, m.u) << '\t' << format_mapping(dag, m.u)
        << '\n';
  return kOk;
}

// --- infer-cost -----------------------------------------------------------

int cmd_infer(const Common& c, const std::string& strategy, const std::string& mapping, const std::string& target,
              const std::string& order, std::ostream& out, json& echo) {
  Dag dag = load_dag(c.file);
  auto la = assign_layers(dag);
  try {
    c.w.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  echo["strategy"] = strategy;
  Schedule s;
  if (strategy == "be") {
    NodeId t = -1;
    if (target.empty()) {
      for (NodeId v = 0; v < dag.size() && t < 0; ++v)
        if (dag.is_leaf(v)) t = v;
    } else {
      t = dag.at(target);
    }
    std::vector<NodeId> ord;
    if (order.empty()) {
      ord = default_elimination_order(dag, la, t);
    } else {
      for (const auto& n : split(order, ',')) ord.push_back(dag.at(n));
    }
    echo["target"] = dag.name(t);
    s = bucket_elimination_schedule(dag, t, ord);
  } else if (strategy == "jointree-fixture") {
    s = jointree_fixture_schedule(dag);
  } else if (strategy == "clusters") {
    if (mapping.empty()) throw ConfigError("--strategy clusters needs --mapping");
    echo["mapping"] = mapping;
    Mapping m = parse_mapping(dag, mapping);
    if (!check_contiguity(dag, m)) throw ValidationError("mapping is not contiguous");
    s = cluster_inference_schedule(dag, la, m);
  } else {
    throw ConfigError("unknown strategy '" + strategy + "'");
  }
  auto r = eval_schedule(dag, s, c.w);
  write_schedule_tsv(out, dag, s, r, c.precise);
  out << "\ntotal\t" << fmt(r.total, c.precise) << '\n';
  return kOk;
}

// --- gen ------------------------------------------------------------------

int cmd_gen(GeneratorSpec spec, const std::string& states, const std::string& out_path, std::ostream& out,
            json& echo) {
  if (!states.empty()) spec.states = parse_state_distribution(states);
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  echo["n"] = spec.n;
  echo["layers"] = spec.layers;
  echo["neighbours"] = spec.neighbours;
  echo["rewire"] = spec.rewire;
  echo["max_in"] = spec.max_in;
  echo["max_out"] = spec.max_out;
  echo["states"] = states;
  echo["seed"] = spec.seed;
  Dag dag = generate_small_world(spec);
  std::ostringstream text;
  text << format_dag(dag);
  auto h = degree_histogram(dag);
  text << "# degree\tin_nodes\tout_nodes\n";
  int top = std::max(h.in.rbegin()->first, h.out.rbegin()->first);
  for (int d = 0; d <= top; ++d)
    text << "# " << d << '\t' << (h.in.count(d) ? h.in[d] : 0) << '\t' << (h.out.count(d) ? h.out[d] : 0) << '\n';
  if (out_path.empty()) {
    out << text.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw ConfigError("cannot write '" + out_path + "'");
    f << text.str();
  }
  return kOk;
}

// --- compare --------------------------------------------------------------

int cmd_compare(const Common& c, int seeds, const std::string& alphas, long max_iters, const std::string& cap_text,
                std::ostream& out, json& echo) {
  Dag dag = load_dag(c.file);
  auto la = assign_layers(dag);
  auto model = model_for(c, dag, la);
  CompareOptions opt;
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  opt.seeds.clear();
  for (int s = 1; s <= seeds; ++s) opt.seeds.push_back(static_cast<std::uint64_t>(s));
  opt.alphas.clear();
  for (const auto& a : split(alphas, ',')) {
    try {
      opt.alphas.push_back(std::stod(a));
    } catch (const std::logic_error&) {
      throw ConfigError("bad alpha '" + a + "'");
    }
  }
  if (max_iters) opt.base.max_iterations = max_iters;
  try {
    opt.cap = BigInt(cap_text);
    for (double a : opt.alphas) {
      SearchConfig probe = opt.base;
      probe.alpha = a;
      probe.check();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error&) {
    throw ConfigError("bad --cap value '" + cap_text + "'");
  }
  echo["seeds"] = seeds;
  echo["alphas"] = alphas;
  echo["max_iters"] = max_iters;
  echo["cap"] = cap_text;

  auto rows = run_compare(dag, la, *model, opt);
  out << "seed\talpha\toptimal_cost\toracle_cost\tmatch\titerations_total\titeration_of_first_optimal\t"
         "first_cost\tcost_trajectory\tsimilarity_trajectory\n";
  for (const auto& r : rows) {
    std::string costs, sims;
    for (std::size_t i = 0; i < r.report.solutions.size(); ++i) {
      const auto& s = r.report.solutions[i];
      if (i) costs += ';';
      costs += std::to_string(s.iteration) + ":" + fmt(s.total_cost, c.precise);
    }
    for (std::size_t i = 0; i < r.similarity.size(); ++i) {
      if (i) sims += ';';
      sims += fmt(r.similarity[i], c.precise);
    }
    bool match = r.oracle_cost && std::abs(*r.oracle_cost - r.report.optimal_cost) < 1e-9 && r.partitions_match;
    out << r.seed << '\t' << fmt(r.alpha, true) << '\t' << fmt(r.report.optimal_cost, c.precise) << '\t'
        << (r.oracle_cost ? fmt(*r.oracle_cost, c.precise) : std::string("-")) << '\t'
        << (r.oracle_cost ? (match ? "yes" : "no") : "-") << '\t' << r.report.iterations_total << '\t'
        << r.report.iteration_of_first_optimal << '\t' << fmt(r.first_cost, c.precise) << '\t'
        << (costs.empty() ? "-" : costs) << '\t' << (sims.empty() ? "-" : sims) << '\n';
  }
  return kOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, bool is_replay);

int run_replay(const std::string& path, std::ostream& out) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read manifest '" + path + "'");
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw ConfigError("manifest lacks argv");
  return dispatch(m["argv"].get<std::vector<std::string>>(), out, true);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, bool is_replay) {
  CLI::App app{"cluster mapping search for DAGs"};
  app.require_subcommand(1);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "write the run manifest here instead of stderr");

  Common c;
  auto* layers = app.add_subcommand("layers", "print the layer of every node");
  layers->add_option("file", c.file, "DAG file")->required();

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "run the cluster mapping search");
  search->add_option("file", c.file, "DAG file")->required();
  search->add_option("--alpha", sa.alpha, "best-first activation probability")->capture_default_str();
  search->add_option("--seed", sa.seed, "random seed")->capture_default_str();
  search->add_option("--max-iters", sa.max_iters, "iteration limit (0 = none)");
  search->add_option("--stall", sa.stall, "stop after this many iterations without improvement");
  search->add_flag("--no-prune", sa.no_prune, "disable dominance and G_min pruning");
  search->add_flag("--gmin-inf", sa.gmin_inf, "start G_min at infinity");
  search->add_flag("--root-split", sa.root_split, "never put two root nodes in one cluster-layer (assumes a super-additive cost)");
  search->add_option("--reference", sa.reference, "'oracle' or mappings separated by ';' for similarity");
  search->add_option("--format", sa.format, "tsv or json")->capture_default_str();
  add_weights(search, c);

  std::string cap = "10000000";
  bool all = false;
  auto* oracle = app.add_subcommand("oracle", "exhaustive optimum over the feasible mappings");
  oracle->add_option("file", c.file, "DAG file")->required();
  oracle->add_option("--cap", cap, "refuse above this many mappings")->capture_default_str();
  oracle->add_flag("--all", all, "list every feasible mapping with its cost");
  add_weights(oracle, c);

  std::string strategy = "be", mapping, target, order;
  auto* infer = app.add_subcommand("infer-cost", "operation cost of an inference schedule");
  infer->add_option("file", c.file, "DAG file")->required();
  infer->add_option("--strategy", strategy, "be | jointree-fixture | clusters")->capture_default_str();
  infer->add_option("--mapping", mapping, "A=1,F=1,... for --strategy clusters");
  infer->add_option("--target", target, "query node for be (default: first leaf)");
  infer->add_option("--order", order, "elimination order for be, comma separated");
  add_weights(infer, c);

  GeneratorSpec gs;
  std::string states, gen_out;
  auto* gen = app.add_subcommand("gen", "generate a small-world DAG");
  gen->add_option("--n", gs.n, "node count")->capture_default_str();
  gen->add_option("--layers", gs.layers, "layer budget (0 = none)")->capture_default_str();
  gen->add_option("--neighbours", gs.neighbours, "lattice span")->capture_default_str();
  gen->add_option("--rewire", gs.rewire, "rewiring probability")->capture_default_str();
  gen->add_option("--max-in", gs.max_in, "in-degree cap")->capture_default_str();
  gen->add_option("--max-out", gs.max_out, "out-degree cap")->capture_default_str();
  gen->add_option("--states", states, "state-count distribution, e.g. 2:0.6,3:0.4");
  gen->add_option("--seed", gs.seed, "random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "write the DAG here instead of stdout");

  int seeds = 5;
  std::string alphas = "0,0.5,1";
  long cmp_iters = 0;
  auto* compare = app.add_subcommand("compare", "engine runs across seeds and alphas, joined with the oracle");
  compare->add_option("file", c.file, "DAG file")->required();
  compare->add_option("--seeds", seeds, "seeds 1..k")->capture_default_str();
  compare->add_option("--alphas", alphas, "comma separated alphas")->capture_default_str();
  compare->add_option("--max-iters", cmp_iters, "iteration limit per run (0 = none)");
  compare->add_option("--cap", cap, "oracle cap")->capture_default_str();
  add_weights(compare, c);

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
  replay->add_option("manifest", replay_path, "manifest file")->required();

  std::vector<const char*> argv{"dcmap"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }

  if (replay->parsed()) {
    if (is_replay) throw ConfigError("a manifest cannot replay another manifest");
    return run_replay(replay_path, out);
  }

  json echo = json::object();
  json manifest = {{"artifact", "dcmap"}, {"version", kVersion}, {"started_at", iso_now()}};
  int code = kOk;
  if (layers->parsed()) code = cmd_layers(c, out, echo);
  if (search->parsed()) code = cmd_search(c, sa, out, echo);
  if (oracle->parsed()) code = cmd_oracle(c, cap, all, out, echo);
  if (infer->parsed()) code = cmd_infer(c, strategy, mapping, target, order, out, echo);
  if (gen->parsed()) code = cmd_gen(gs, states, gen_out, out, echo);
  if (compare->parsed()) code = cmd_compare(c, seeds, alphas, cmp_iters, cap, out, echo);
  if (!c.file.empty()) {
    manifest["input"] = c.file;
    json weights = config_echo(c);
    echo.insert(weights.begin(), weights.end());
  }
  manifest["command"] = app.get_subcommands().front()->get_name();
  manifest["config"] = echo;
  // replay strips the manifest destination so a replay never overwrites it
  std::vector<std::string> recorded;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") {
      ++i;
      continue;
    }
    if (args[i].rfind("--manifest=", 0) == 0) continue;
    recorded.push_back(args[i]);
  }
  manifest["argv"] = recorded;
  manifest["finished_at"] = iso_now();
  if (!is_replay) {
    if (manifest_path.empty()) {
      std::cerr << "manifest " << manifest.dump() << '\n';
    } else {
      std::ofstream f(manifest_path);
      if (!f) throw ConfigError("cannot write manifest '" + manifest_path + "'");
      f << manifest.dump(2) << '\n';
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args, std::cout, false);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCap;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
