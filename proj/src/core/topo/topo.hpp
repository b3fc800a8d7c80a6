// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "chem/molgraph.hpp"

namespace molswap::topo {

using chem::MolGraph;

// Multiplicity-collapsed view: one edge per bonded pair. Edge ids follow
// MolGraph::bonds() order.
struct SimpleGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // first < second
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge id)

  static SimpleGraph from_edges(int n, std::vector<std::pair<int, int>> edges);
  static SimpleGraph from_mol(const MolGraph& g);
  int edge_id(int a, int b) const;  // -1 when absent
};

bool is_connected(const MolGraph& g);
int connected_components(const SimpleGraph& g);

// Flags are indexed by bond record (MolGraph::bonds() order).
//  multigraph: every multiplicity unit is a parallel edge, so only a single
//              bond can be a bridge.
//  simplified: bridges of the collapsed graph.
struct BridgeSets {
  std::vector<bool> multigraph;
  std::vector<bool> simplified;

  int multigraph_count() const;
  int simplified_count() const;
};
BridgeSets bridges(const MolGraph& g);
std::vector<bool> simple_bridges(const SimpleGraph& g);

// Size buckets used by the cycle features: 3..14 map to 0..11, 15+ to 12.
inline constexpr int kCycleBuckets = 13;
inline int cycle_bucket(int size) { return size >= 15 ? 12 : size - 3; }

struct CycleSet {
  std::vector<std::vector<int>> cycles;  // edge ids of each basis cycle
  std::vector<std::vector<int>> node_membership;  // per atom, sizes of basis cycles through it
  std::vector<std::vector<int>> edge_membership;  // per bond record
  std::array<int, kCycleBuckets> histogram{};
};

// Minimum cycle basis of the simplified graph via Horton candidates and
// GF(2) elimination. Equal-length candidates are ordered by the refined atom
// classes they visit, so the choice does not depend on atom numbering unless
// the tie is between symmetric cycles.
CycleSet min_cycle_basis(const MolGraph& g);

bool is_planar(const MolGraph& g);
bool is_planar(const SimpleGraph& g);

inline constexpr int kPathCountCap = 8;
// Edge-disjoint paths between a and b in the simplified graph, capped.
int local_edge_connectivity(const MolGraph& g, int a, int b);
int local_edge_connectivity(const SimpleGraph& g, int a, int b, int cap = kPathCountCap);

struct Point {
  double x = 0.0;
  double y = 0.0;
};
struct Layout2D {
  std::vector<Point> positions;
  double distance(int a, int b) const;
};

inline constexpr int kLayoutIterations = 200;
Layout2D layout_2d(const MolGraph& g);

}  // namespace molswap::topo
