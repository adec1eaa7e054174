#pragma once

#include "dcmap/dag.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dcmap {

struct GeneratorSpec {
  int n = 10;
  int layers = 0;  // 0: no limit; otherwise at most this many layers
  int neighbours = 2;  // forward lattice span before rewiring
  double rewire = 0.2;
  int max_in = 4;
  int max_out = 8;
  std::vector<std::pair<int, double>> states{{2, 1.0}};
  std::uint64_t seed = 1;

  void check() const;  // throws std::invalid_argument
};

// "2:0.6,3:0.3,4:0.1"
std::vector<std::pair<int, double>> parse_state_distribution(const std::string& text);

// Forward ring lattice over a fixed node order, arcs rewired with
// preferential choice of the new parent, then patched to be connected.
Dag generate_small_world(const GeneratorSpec& spec);

struct DegreeHistogram {
  std::map<int, int> in, out;  // degree -> node count
};

DegreeHistogram degree_histogram(const Dag& dag);

}  // namespace dcmap
