// SPDX-License-Identifier: Apache-2.0
#include "featurize/features.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "topo/topo.hpp"

namespace molswap::feat {

FeatureBundle featurize(const MolGraph& g, double t) {
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::kTimeOutOfRange, "time " + std::to_string(t) + " outside [0, 1]");
  if (!topo::is_connected(g)) fail(ErrorCode::kNotConnected, "featurize requires a connected graph");

  const int n = g.atom_count();
  const auto bonds = g.bonds();
  const int m = static_cast<int>(bonds.size());
  const auto simple = topo::SimpleGraph::from_mol(g);
  const auto br = topo::bridges(g);
  const auto cycles = topo::min_cycle_basis(g);
  const auto layout = topo::layout_2d(g);

  FeatureBundle f;
  f.n = n;
  f.t = t;
  f.X = Eigen::MatrixXd::Zero(n, kNodeDim);
  f.E = Eigen::MatrixXd::Zero(m, kEdgeDim);
  f.g = Eigen::VectorXd::Zero(kGraphDim);
  f.edge_index_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), -1);

  std::vector<int> bridge_count(static_cast<std::size_t>(n), 0);
  int order_count[4] = {0, 0, 0, 0};
  for (int e = 0; e < m; ++e) {
    const auto& b = bonds[static_cast<std::size_t>(e)];
    f.bonds.emplace_back(b.a, b.b);
    f.edge_index_[static_cast<std::size_t>(b.a * n + b.b)] = e;
    f.edge_index_[static_cast<std::size_t>(b.b * n + b.a)] = e;
    f.E(e, edge::kOrder + b.order - 1) = 1.0;
    ++order_count[b.order - 1];
    for (int size : cycles.edge_membership[static_cast<std::size_t>(e)]) {
      f.E(e, edge::kCycles + topo::cycle_bucket(size)) = 1.0;
    }
    if (br.multigraph[static_cast<std::size_t>(e)]) {
      f.E(e, edge::kBridge) = 1.0;
      ++bridge_count[static_cast<std::size_t>(b.a)];
      ++bridge_count[static_cast<std::size_t>(b.b)];
    }
    f.E(e, edge::kPaths) = topo::local_edge_connectivity(simple, b.a, b.b, topo::kPathCountCap) / kPathCap;
    f.E(e, edge::kDistance) = layout.distance(b.a, b.b);
  }

  for (int a = 0; a < n; ++a) {
    f.X(a, node::kElement + chem::index_of(g.element(a))) = 1.0;
    for (int size : cycles.node_membership[static_cast<std::size_t>(a)]) {
      f.X(a, node::kCycles + topo::cycle_bucket(size)) = 1.0;
    }
    f.X(a, node::kHeavy) = g.heavy_neighbor_count(a) / kNeighborCap;
    f.X(a, node::kHydrogen) = g.hydrogen_count(a) / kNeighborCap;
    f.X(a, node::kBridges) = bridge_count[static_cast<std::size_t>(a)] / kBridgeCap;
  }

  for (int k = 0; k < topo::kCycleBuckets; ++k) {
    f.g(graph::kCycles + k) = cycles.histogram[static_cast<std::size_t>(k)] / kCycleCountCap;
  }
  f.g(graph::kPlanar) = topo::is_planar(simple) ? 1.0 : 0.0;
  f.g(graph::kComponents) = topo::connected_components(simple);
  if (m > 0) {
    f.g(graph::kBridgeFraction) = static_cast<double>(br.multigraph_count()) / m;
    f.g(graph::kSimpleBridgeFraction) = static_cast<double>(br.simplified_count()) / m;
    for (int k = 0; k < 3; ++k) f.g(graph::kBondTypes + k) = static_cast<double>(order_count[k]) / m;
  }
  return f;
}

Fingerprint fingerprint(const MolGraph& g) {
  const int n = g.atom_count();
  std::vector<int> atoms;
  for (int a = 0; a < n; ++a) {
    if (!g.is_hydrogen(a)) atoms.push_back(a);
  }
  const bool heavy_only = !atoms.empty();
  if (!heavy_only) {
    for (int a = 0; a < n; ++a) atoms.push_back(a);
  }
  auto included = [&](int a) { return !heavy_only || !g.is_hydrogen(a); };

  std::vector<std::uint64_t> code(static_cast<std::size_t>(n), 0);
  for (int a : atoms) {
    std::vector<std::uint64_t> mults;
    for (int b : g.neighbors(a)) {
      if (included(b)) mults.push_back(static_cast<std::uint64_t>(g.multiplicity(a, b)));
    }
    std::sort(mults.begin(), mults.end());
    std::uint64_t h = mix_seed({static_cast<std::uint64_t>(chem::index_of(g.element(a))),
                                static_cast<std::uint64_t>(g.degree(a)),
                                static_cast<std::uint64_t>(g.hydrogen_count(a))});
    for (auto mlt : mults) h = mix_seed({h, mlt});
    code[static_cast<std::size_t>(a)] = h;
  }

  Fingerprint fp;
  for (int r = 0;; ++r) {
    for (int a : atoms) fp.set(static_cast<std::size_t>(code[static_cast<std::size_t>(a)] % kFingerprintBits));
    if (r == kFingerprintRadius) break;
    std::vector<std::uint64_t> next = code;
    for (int a : atoms) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
      for (int b : g.neighbors(a)) {
        if (included(b)) {
          env.emplace_back(static_cast<std::uint64_t>(g.multiplicity(a, b)), code[static_cast<std::size_t>(b)]);
        }
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = mix_seed({static_cast<std::uint64_t>(r + 1), code[static_cast<std::size_t>(a)]});
      for (const auto& [mlt, c] : env) h = mix_seed({h, mlt, c});
      next[static_cast<std::size_t>(a)] = h;
    }
    code = std::move(next);
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  const auto uni = (a | b).count();
  if (uni == 0) return 0.0;
  return static_cast<double>((a & b).count()) / static_cast<double>(uni);
}

}  // namespace molswap::feat
