#pragma once

#include "dcmap/cost_model.hpp"
#include "dcmap/dag.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <vector>

namespace dcmap {

struct SearchConfig {
  double alpha = 0.5;
  std::uint64_t seed = 1;
  std::optional<long> max_iterations;
  std::optional<long> stall_window;
  bool prune = true;
  bool gmin_infinite = false;
  bool root_split_filter = false;
  std::optional<Mapping> leaf_init;  // labels for leaves; others ignored

  static SearchConfig enumeration();
  void check() const;  // throws std::invalid_argument
};

struct SolutionRecord {
  Mapping u;
  double total_cost = 0;
  double gmin = 0;  // after this solution
  long iteration = 0;
  int branch = 0;
  bool optimal = false;
};

struct IterationInfo {
  long iteration = 0;
  double gmin = 0;
  bool activation = false;   // no pop this iteration
  int branch = -1;           // popped or activated branch
  bool branch_was_alive = true;
  bool branch_pruned = false;  // popped branch died in the pruning step
};

struct SearchReport {
  double optimal_cost = 0;
  std::size_t optimal_solution_count = 0;
  long iterations_total = 0;
  long iteration_of_first_optimal = 0;
  std::size_t branches_complete = 0;
  std::size_t branches_created = 0;
  std::size_t branches_pruned = 0;
  bool terminated_early = false;
  std::vector<SolutionRecord> solutions;  // discovery order

  std::vector<Mapping> optimal_mappings() const;  // one per partition
};

using SolutionCallback = std::function<void(const SolutionRecord&)>;
using IterationHook = std::function<void(const IterationInfo&)>;

SearchReport run_search(const Dag& dag, const LayerAssignment& layers, const CostModel& model,
                        const SearchConfig& config, const SolutionCallback& on_solution = {},
                        const IterationHook& on_iteration = {});

// Blocking queue for handing the solution stream to another thread.
template <class T>
class Channel {
 public:
  void push(T v) {
    {
      std::lock_guard lk(m_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  void close() {
    {
      std::lock_guard lk(m_);
      closed_ = true;
    }
    cv_.notify_all();
  }
  // nullopt once closed and drained
  std::optional<T> pop() {
    std::unique_lock lk(m_);
    cv_.wait(lk, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<T> q_;
  bool closed_ = false;
};

}  // namespace dcmap
