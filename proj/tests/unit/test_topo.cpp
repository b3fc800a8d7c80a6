// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "chem/smiles.hpp"
#include "topo/topo.hpp"
#include "test_util.hpp"

namespace molswap {
namespace {

using chem::MolGraph;
using chem::parse_smiles;
using topo::SimpleGraph;

bool bfs_connected(int n, const std::vector<std::pair<int, int>>& edges, int skip = -1) {
  if (n == 0) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (static_cast<int>(e) == skip) continue;
    adj[static_cast<std::size_t>(edges[e].first)].push_back(edges[e].second);
    adj[static_cast<std::size_t>(edges[e].second)].push_back(edges[e].first);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> todo{0};
  seen[0] = true;
  int count = 1;
  while (!todo.empty()) {
    const int a = todo.back();
    todo.pop_back();
    for (int b : adj[static_cast<std::size_t>(a)]) {
      if (!seen[static_cast<std::size_t>(b)]) {
        seen[static_cast<std::size_t>(b)] = true;
        ++count;
        todo.push_back(b);
      }
    }
  }
  return count == n;
}

std::vector<std::pair<int, int>> edge_list(const MolGraph& g) {
  std::vector<std::pair<int, int>> e;
  for (const auto& b : g.bonds()) e.emplace_back(b.a, b.b);
  return e;
}

TEST(Connectivity, Examples) {
  EXPECT_TRUE(topo::is_connected(parse_smiles("CCO")));
  MolGraph two(std::vector<chem::Element>(4, chem::Element::H));
  two.add_bond(0, 1);
  two.add_bond(2, 3);
  EXPECT_FALSE(topo::is_connected(two));
  // 4-cycle of carbons (as a raw graph), swap opposite edges.
  MolGraph ring(std::vector<chem::Element>(4, chem::Element::C));
  ring.add_bond(0, 1);
  ring.add_bond(1, 2);
  ring.add_bond(2, 3);
  ring.add_bond(0, 3);
  const MolGraph swapped = diffusion::apply(ring, {0, 1, 2, 3});
  EXPECT_TRUE(topo::is_connected(swapped));
  EXPECT_TRUE(bfs_connected(4, edge_list(swapped)));
}

TEST(Bridges, TolueneFractionAndOracle) {
  const MolGraph g = parse_smiles("CC1=CC=CC=C1");
  const auto br = topo::bridges(g);
  EXPECT_EQ(br.simplified_count(), 9);
  EXPECT_NEAR(static_cast<double>(br.simplified_count()) / g.bond_count(), 0.6, 1e-12);
  const auto edges = edge_list(g);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    EXPECT_EQ(br.simplified[e], !bfs_connected(g.atom_count(), edges, static_cast<int>(e)));
  }
}

TEST(Bridges, BenzeneAndHydrogen) {
  const MolGraph g = parse_smiles("C1=CC=CC=C1");
  const auto br = topo::bridges(g);
  const auto bonds = g.bonds();
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    EXPECT_EQ(br.simplified[i], g.is_hydrogen(bonds[i].a) || g.is_hydrogen(bonds[i].b));
  }
  const auto h2 = topo::bridges(parse_smiles("[H][H]"));
  EXPECT_TRUE(h2.simplified[0]);
  EXPECT_TRUE(h2.multigraph[0]);
}

TEST(Bridges, MultigraphCountsParallelUnits) {
  // Ethylene: the C=C bond is a bridge of the collapsed graph but has two
  // parallel units in the multigraph.
  const MolGraph g = parse_smiles("C=C");
  const auto br = topo::bridges(g);
  const auto bonds = g.bonds();
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    EXPECT_TRUE(br.simplified[i]);
    EXPECT_EQ(br.multigraph[i], bonds[i].order == 1);
  }
}

TEST(Bridges, RandomMoleculesMatchDeletionOracle) {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const MolGraph g = testing::random_small_molecule(rng);
    const auto br = topo::bridges(g);
    const auto edges = edge_list(g);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      EXPECT_EQ(br.simplified[e], !bfs_connected(g.atom_count(), edges, static_cast<int>(e)));
    }
  }
}

// Every simple cycle as a sorted edge-id set.
std::vector<std::vector<int>> all_cycles(const SimpleGraph& g) {
  std::set<std::vector<int>> found;
  std::vector<int> path_edges;
  std::vector<bool> on_path(static_cast<std::size_t>(g.n), false);
  auto walk = [&](auto&& self, int start, int v) -> void {
    for (const auto& [w, e] : g.adj[static_cast<std::size_t>(v)]) {
      if (w == start && path_edges.size() >= 2 && e != path_edges.back()) {
        auto c = path_edges;
        c.push_back(e);
        std::sort(c.begin(), c.end());
        found.insert(c);
      } else if (w > start && !on_path[static_cast<std::size_t>(w)]) {
        on_path[static_cast<std::size_t>(w)] = true;
        path_edges.push_back(e);
        self(self, start, w);
        path_edges.pop_back();
        on_path[static_cast<std::size_t>(w)] = false;
      }
    }
  };
  for (int s = 0; s < g.n; ++s) {
    on_path[static_cast<std::size_t>(s)] = true;
    walk(walk, s, s);
    on_path[static_cast<std::size_t>(s)] = false;
  }
  return {found.begin(), found.end()};
}

// Greedy independent selection over every cycle by length gives a minimum
// cycle basis; returns its sorted lengths.
std::vector<int> oracle_basis_lengths(const SimpleGraph& g) {
  auto cycles = all_cycles(g);
  std::stable_sort(cycles.begin(), cycles.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
  std::vector<std::vector<bool>> rows;
  std::vector<int> lengths;
  for (const auto& c : cycles) {
    std::vector<bool> v(g.edges.size(), false);
    for (int e : c) v[static_cast<std::size_t>(e)] = true;
    for (const auto& r : rows) {
      std::size_t pivot = 0;
      while (!r[pivot]) ++pivot;
      if (v[pivot]) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] != r[i];
      }
    }
    if (std::find(v.begin(), v.end(), true) == v.end()) continue;
    // Keep rows in echelon form keyed by first set position.
    rows.push_back(v);
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return std::find(a.begin(), a.end(), true) - a.begin() < std::find(b.begin(), b.end(), true) - b.begin();
    });
    // Re-reduce so pivots stay unique.
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t p = static_cast<std::size_t>(std::find(rows[i].begin(), rows[i].end(), true) - rows[i].begin());
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (j != i && rows[j][p]) {
          for (std::size_t k = 0; k < rows[j].size(); ++k) rows[j][k] = rows[j][k] != rows[i][k];
        }
      }
    }
    lengths.push_back(static_cast<int>(c.size()));
  }
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

TEST(Cycles, Benzene) {
  const MolGraph g = parse_smiles("C1=CC=CC=C1");
  const auto cs = topo::min_cycle_basis(g);
  ASSERT_EQ(cs.cycles.size(), 1u);
  EXPECT_EQ(cs.cycles[0].size(), 6u);
  EXPECT_EQ(cs.histogram[static_cast<std::size_t>(topo::cycle_bucket(6))], 1);
  for (int a = 0; a < 6; ++a) EXPECT_EQ(cs.node_membership[static_cast<std::size_t>(a)], std::vector<int>{6});
  for (int a = 6; a < 12; ++a) EXPECT_TRUE(cs.node_membership[static_cast<std::size_t>(a)].empty());
}

TEST(Cycles, NaphthaleneSharedBond) {
  const MolGraph g = parse_smiles("C1=CC=C2C=CC=CC2=C1");
  const auto cs = topo::min_cycle_basis(g);
  ASSERT_EQ(cs.cycles.size(), 2u);
  EXPECT_EQ(cs.cycles[0].size(), 6u);
  EXPECT_EQ(cs.cycles[1].size(), 6u);
  const auto bonds = g.bonds();
  int shared = 0;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    if (cs.edge_membership[i] == std::vector<int>{6, 6}) ++shared;
  }
  EXPECT_EQ(shared, 1);
  EXPECT_EQ(oracle_basis_lengths(SimpleGraph::from_mol(g)), (std::vector<int>{6, 6}));
}

TEST(Cycles, ButaneHasNone) { EXPECT_TRUE(topo::min_cycle_basis(parse_smiles("CCCC")).cycles.empty()); }

TEST(Cycles, RandomGraphsMatchExhaustiveOracle) {
  Rng rng(99);
  for (int k = 0; k < 60; ++k) {
    const int n = 4 + static_cast<int>(rng.below(6));
    std::set<std::pair<int, int>> es;
    for (int v = 1; v < n; ++v) es.insert({static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v});
    const int extra = static_cast<int>(rng.below(5));
    for (int x = 0; x < extra; ++x) {
      int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (a == b) continue;
      es.insert({std::min(a, b), std::max(a, b)});
    }
    MolGraph g(std::vector<chem::Element>(static_cast<std::size_t>(n), chem::Element::C));
    for (const auto& [a, b] : es) g.add_bond(a, b);
    const auto cs = topo::min_cycle_basis(g);
    std::vector<int> lengths;
    for (const auto& c : cs.cycles) lengths.push_back(static_cast<int>(c.size()));
    std::sort(lengths.begin(), lengths.end());
    EXPECT_EQ(lengths, oracle_basis_lengths(SimpleGraph::from_mol(g)));
    EXPECT_EQ(static_cast<int>(cs.cycles.size()), static_cast<int>(es.size()) - n + 1);
  }
}

// Rotation-system oracle: a connected graph is planar iff some choice of
// cyclic neighbour orders yields V - E + F = 2.
bool planar_by_rotations(const SimpleGraph& g) {
  const int n = g.n;
  const int m = static_cast<int>(g.edges.size());
  if (m == 0) return true;
  std::vector<std::vector<int>> rot(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    for (const auto& [w, e] : g.adj[static_cast<std::size_t>(v)]) rot[static_cast<std::size_t>(v)].push_back(w);
    std::sort(rot[static_cast<std::size_t>(v)].begin(), rot[static_cast<std::size_t>(v)].end());
  }
  auto faces = [&]() {
    std::map<std::pair<int, int>, bool> used;
    int f = 0;
    for (int v = 0; v < n; ++v) {
      for (int w : rot[static_cast<std::size_t>(v)]) {
        if (used[{v, w}]) continue;
        ++f;
        int a = v, b = w;
        while (!used[{a, b}]) {
          used[{a, b}] = true;
          const auto& r = rot[static_cast<std::size_t>(b)];
          const auto it = std::find(r.begin(), r.end(), a);
          const int next = r[static_cast<std::size_t>((it - r.begin() + 1) % static_cast<long>(r.size()))];
          a = b;
          b = next;
        }
      }
    }
    return f;
  };
  auto search = [&](auto&& self, int v) -> bool {
    if (v == n) return n - m + faces() == 2;
    auto& r = rot[static_cast<std::size_t>(v)];
    if (r.size() <= 2) return self(self, v + 1);
    // Fix the first neighbour; permute the rest.
    std::sort(r.begin() + 1, r.end());
    do {
      if (self(self, v + 1)) return true;
    } while (std::next_permutation(r.begin() + 1, r.end()));
    return false;
  };
  return search(search, 0);
}

SimpleGraph complete(int n) {
  std::vector<std::pair<int, int>> e;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) e.emplace_back(a, b);
  }
  return SimpleGraph::from_edges(n, e);
}

TEST(Planarity, Examples) {
  EXPECT_TRUE(topo::is_planar(parse_smiles("C1=CC=CC=C1")));
  EXPECT_TRUE(topo::is_planar(parse_smiles("CCCCCC")));
  EXPECT_FALSE(topo::is_planar(complete(5)));
  EXPECT_FALSE(planar_by_rotations(complete(5)));
  std::vector<std::pair<int, int>> k33;
  for (int a = 0; a < 3; ++a) {
    for (int b = 3; b < 6; ++b) k33.emplace_back(a, b);
  }
  EXPECT_FALSE(topo::is_planar(SimpleGraph::from_edges(6, k33)));
  EXPECT_FALSE(planar_by_rotations(SimpleGraph::from_edges(6, k33)));
  EXPECT_TRUE(topo::is_planar(complete(4)));
}

TEST(Planarity, RandomGraphsMatchRotationOracle) {
  Rng rng(4242);
  int nonplanar = 0, tested = 0;
  for (int k = 0; k < 200; ++k) {
    const int n = 6 + static_cast<int>(rng.below(2));
    std::set<std::pair<int, int>> es;
    for (int v = 1; v < n; ++v) es.insert({static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v});
    if (k % 2 == 0) {
      // Half of the graphs start from K3,3 minus a random edge.
      const std::uint64_t drop = rng.below(10);
      for (int a = 0; a < 3; ++a) {
        for (int b = 3; b < 6; ++b) {
          if (static_cast<std::uint64_t>(a * 3 + b - 3) != drop) es.insert({a, b});
        }
      }
    }
    const int target = static_cast<int>(es.size()) + static_cast<int>(rng.below(3));
    for (int guard = 0; static_cast<int>(es.size()) < target && guard < 100; ++guard) {
      int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (a != b) es.insert({std::min(a, b), std::max(a, b)});
    }
    const auto g = SimpleGraph::from_edges(n, {es.begin(), es.end()});
    // Keep the rotation search small: product of (deg - 1)! over vertices.
    double rotations = 1.0;
    for (const auto& nb : g.adj) {
      for (std::size_t f = 2; f < nb.size(); ++f) rotations *= static_cast<double>(f);
    }
    if (rotations > 20000.0) continue;
    ++tested;
    const bool oracle = planar_by_rotations(g);
    nonplanar += !oracle;
    EXPECT_EQ(topo::is_planar(g), oracle) << "graph " << k;
  }
  EXPECT_GE(tested, 40);
  EXPECT_GT(nonplanar, 0);
  // K5 and K3,3 with a subdivided edge stay nonplanar.
  auto k5 = complete(5).edges;
  k5.erase(k5.begin());
  k5.emplace_back(0, 5);
  k5.emplace_back(1, 5);
  EXPECT_FALSE(topo::is_planar(SimpleGraph::from_edges(6, k5)));
  EXPECT_FALSE(planar_by_rotations(SimpleGraph::from_edges(6, k5)));
  std::printf("rotation oracle: %d graphs, %d nonplanar\n", tested, nonplanar);
}

// Minimum number of edges whose removal separates a from b, by brute force
// over edge subsets; equals the maximum number of edge-disjoint paths.
int min_cut_oracle(const SimpleGraph& g, int a, int b) {
  const int m = static_cast<int>(g.edges.size());
  int best = m;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size >= best) continue;
    std::vector<std::pair<int, int>> kept;
    for (int e = 0; e < m; ++e) {
      if (!(mask >> e & 1u)) kept.push_back(g.edges[static_cast<std::size_t>(e)]);
    }
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n));
    for (const auto& [x, y] : kept) {
      adj[static_cast<std::size_t>(x)].push_back(y);
      adj[static_cast<std::size_t>(y)].push_back(x);
    }
    std::vector<bool> seen(static_cast<std::size_t>(g.n), false);
    std::vector<int> todo{a};
    seen[static_cast<std::size_t>(a)] = true;
    while (!todo.empty()) {
      const int v = todo.back();
      todo.pop_back();
      for (int w : adj[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          todo.push_back(w);
        }
      }
    }
    if (!seen[static_cast<std::size_t>(b)]) best = size;
  }
  return best;
}

TEST(Paths, Examples) {
  const MolGraph benzene = parse_smiles("C1=CC=CC=C1");
  int a = -1, b = -1;
  for (const auto& bd : benzene.bonds()) {
    if (!benzene.is_hydrogen(bd.a) && !benzene.is_hydrogen(bd.b)) {
      a = bd.a;
      b = bd.b;
      break;
    }
  }
  EXPECT_EQ(topo::local_edge_connectivity(benzene, a, b), 2);
  for (const auto& bd : benzene.bonds()) {
    if (benzene.is_hydrogen(bd.b)) EXPECT_EQ(topo::local_edge_connectivity(benzene, bd.a, bd.b), 1);
  }
  const MolGraph naph = parse_smiles("C1=CC=C2C=CC=CC2=C1");
  const auto cs = topo::min_cycle_basis(naph);
  const auto bonds = naph.bonds();
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    if (cs.edge_membership[i].size() == 2) EXPECT_EQ(topo::local_edge_connectivity(naph, bonds[i].a, bonds[i].b), 3);
  }
}

TEST(Paths, HeavySkeletonsMatchCutOracle) {
  for (const char* smi : {"C1=CC=C2C=CC=CC2=C1", "C1CC2CCC1C2", "CC1=CC=CC=C1", "C1CC1C1CC1"}) {
    const MolGraph g = parse_smiles(smi);
    std::vector<int> heavy_index(static_cast<std::size_t>(g.atom_count()), -1);
    int n = 0;
    for (int x = 0; x < g.atom_count(); ++x) {
      if (!g.is_hydrogen(x)) heavy_index[static_cast<std::size_t>(x)] = n++;
    }
    std::vector<std::pair<int, int>> e;
    for (const auto& bd : g.bonds()) {
      const int x = heavy_index[static_cast<std::size_t>(bd.a)], y = heavy_index[static_cast<std::size_t>(bd.b)];
      if (x >= 0 && y >= 0) e.emplace_back(x, y);
    }
    const auto sg = SimpleGraph::from_edges(n, e);
    for (int x = 0; x < n; ++x) {
      for (int y = x + 1; y < n; ++y) EXPECT_EQ(topo::local_edge_connectivity(sg, x, y), min_cut_oracle(sg, x, y)) << smi;
    }
  }
}

TEST(Layout, DeterministicAndScaled) {
  const MolGraph g = parse_smiles("C1=CC=CC=C1");
  const auto a = topo::layout_2d(g);
  const auto b = topo::layout_2d(g);
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    EXPECT_EQ(a.positions[i].x, b.positions[i].x);
    EXPECT_EQ(a.positions[i].y, b.positions[i].y);
  }
  for (const auto& bd : g.bonds()) {
    if (g.is_hydrogen(bd.a) || g.is_hydrogen(bd.b)) continue;
    const double d = a.distance(bd.a, bd.b);
    EXPECT_GE(d, 0.5);
    EXPECT_LE(d, 2.0);
  }
  const auto h2 = topo::layout_2d(parse_smiles("[H][H]"));
  EXPECT_NEAR(h2.distance(0, 1), 1.0, 1e-9);
}

}  // namespace
}  // namespace molswap
