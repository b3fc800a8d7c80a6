// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "evaluate/evaluate.hpp"
#include "featurize/features.hpp"
#include "topo/topo.hpp"

namespace molswap::eval {

using chem::Element;

namespace {

bool is_n_or_o(Element e) { return e == Element::N || e == Element::O; }

// Heavy-atom subgraph with simple adjacency.
struct HeavyGraph {
  std::vector<int> atoms;              // heavy index -> atom
  std::vector<int> index;              // atom -> heavy index or -1
  std::vector<std::vector<int>> adj;   // heavy indices
  int edges = 0;
};

HeavyGraph heavy_graph(const MolGraph& g) {
  HeavyGraph h;
  h.index.assign(static_cast<std::size_t>(g.atom_count()), -1);
  for (int a = 0; a < g.atom_count(); ++a) {
    if (!g.is_hydrogen(a)) {
      h.index[static_cast<std::size_t>(a)] = static_cast<int>(h.atoms.size());
      h.atoms.push_back(a);
    }
  }
  h.adj.resize(h.atoms.size());
  for (const auto& b : g.bonds()) {
    const int x = h.index[static_cast<std::size_t>(b.a)], y = h.index[static_cast<std::size_t>(b.b)];
    if (x < 0 || y < 0) continue;
    h.adj[static_cast<std::size_t>(x)].push_back(y);
    h.adj[static_cast<std::size_t>(y)].push_back(x);
    ++h.edges;
  }
  return h;
}

double balaban_j(const HeavyGraph& h) {
  const int n = static_cast<int>(h.atoms.size());
  if (h.edges == 0) return 0.0;
  std::vector<double> dist_sum(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    std::vector<int> d(static_cast<std::size_t>(n), -1);
    std::queue<int> q;
    d[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      const int a = q.front();
      q.pop();
      for (int b : h.adj[static_cast<std::size_t>(a)]) {
        if (d[static_cast<std::size_t>(b)] < 0) {
          d[static_cast<std::size_t>(b)] = d[static_cast<std::size_t>(a)] + 1;
          q.push(b);
        }
      }
    }
    for (int t = 0; t < n; ++t) dist_sum[static_cast<std::size_t>(s)] += d[static_cast<std::size_t>(t)];
  }
  const int mu = h.edges - n + 1;
  double sum = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b : h.adj[static_cast<std::size_t>(a)]) {
      if (a < b) sum += 1.0 / std::sqrt(dist_sum[static_cast<std::size_t>(a)] * dist_sum[static_cast<std::size_t>(b)]);
    }
  }
  return static_cast<double>(h.edges) / (mu + 1) * sum;
}

// Topological polar surface area contributions of N and O (kekulized forms,
// charges are not representable).
double tpsa_contribution(const MolGraph& g, int a, bool in_three_ring) {
  const Element e = g.element(a);
  const int hs = g.hydrogen_count(a);
  int single = 0, dbl = 0, triple = 0;
  for (int b : g.neighbors(a)) {
    if (g.is_hydrogen(b)) continue;
    const int m = g.multiplicity(a, b);
    if (m == 1) ++single;
    if (m == 2) ++dbl;
    if (m == 3) ++triple;
  }
  if (e == Element::N) {
    if (hs == 0 && single == 3) return in_three_ring ? 3.01 : 3.24;
    if (hs == 0 && single == 1 && dbl == 1) return 12.36;
    if (hs == 0 && triple == 1) return 23.79;
    if (hs == 1 && single == 2) return in_three_ring ? 21.94 : 12.03;
    if (hs == 1 && dbl == 1) return 23.85;
    if (hs == 2 && single == 1) return 26.02;
    return 0.0;
  }
  if (e == Element::O) {
    if (hs == 0 && single == 2) return in_three_ring ? 12.53 : 9.23;
    if (hs == 0 && dbl == 1) return 17.07;
    if (hs == 1 && single == 1) return 20.23;
    return 0.0;
  }
  return 0.0;
}

double delta_v(const MolGraph& g, int a) {
  return static_cast<double>(chem::info(g.element(a)).valence_electrons - g.hydrogen_count(a));
}

double inv_sqrt_or_zero(double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; }

}  // namespace

int descriptor_index(std::string_view id) {
  for (int i = 0; i < kDescriptorCount; ++i) {
    if (kDescriptorIds[static_cast<std::size_t>(i)] == id) return i;
  }
  return -1;
}

bool is_integer_descriptor(int index) {
  switch (index) {
    case 2: case 3: case 4: case 5: case 8: case 9: case 10: case 12: case 13: case 14: case 15:
      return true;
    default:
      return false;
  }
}

double DescriptorVector::get(std::string_view id) const {
  const int i = descriptor_index(id);
  if (i < 0) fail(ErrorCode::kInvalidArgument, "unknown descriptor " + std::string(id));
  return values[static_cast<std::size_t>(i)];
}

int aromatic_ring_count(const MolGraph& g) {
  const auto cycles = topo::min_cycle_basis(g);
  const auto bonds = g.bonds();
  // Bonds lying in some 5/6-membered basis cycle.
  std::vector<bool> small_ring_bond(bonds.size(), false);
  for (const auto& c : cycles.cycles) {
    if (c.size() == 5 || c.size() == 6) {
      for (int e : c) small_ring_bond[static_cast<std::size_t>(e)] = true;
    }
  }
  auto bond_id = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    for (std::size_t i = 0; i < bonds.size(); ++i) {
      if (bonds[i].a == a && bonds[i].b == b) return static_cast<int>(i);
    }
    return -1;
  };
  int count = 0;
  for (const auto& c : cycles.cycles) {
    if (c.size() != 5 && c.size() != 6) continue;
    std::vector<int> atoms;
    std::vector<bool> in_cycle_bond(bonds.size(), false);
    for (int e : c) {
      in_cycle_bond[static_cast<std::size_t>(e)] = true;
      atoms.push_back(bonds[static_cast<std::size_t>(e)].a);
      atoms.push_back(bonds[static_cast<std::size_t>(e)].b);
    }
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
    int pi = 0;
    bool ok = true;
    for (int a : atoms) {
      const Element e = g.element(a);
      if (e != Element::C && e != Element::N && e != Element::O && e != Element::S) {
        ok = false;
        break;
      }
      int ring_double = 0, fused_double = 0, other_multiple = 0;
      for (int b : g.neighbors(a)) {
        const int m = g.multiplicity(a, b);
        if (m == 1) continue;
        const int id = bond_id(a, b);
        if (m == 2 && in_cycle_bond[static_cast<std::size_t>(id)]) {
          ++ring_double;
        } else if (m == 2 && small_ring_bond[static_cast<std::size_t>(id)]) {
          ++fused_double;
        } else {
          ++other_multiple;
        }
      }
      if (other_multiple > 0 || ring_double + fused_double > 1) {
        ok = false;
        break;
      }
      if (ring_double + fused_double == 1) {
        pi += 1;
      } else if (e == Element::N || e == Element::O || e == Element::S) {
        pi += 2;
      } else {
        ok = false;
        break;
      }
    }
    if (ok && pi % 4 == 2) ++count;
  }
  return count;
}

DescriptorVector descriptors(const MolGraph& g) {
  if (!topo::is_connected(g)) fail(ErrorCode::kNotConnected, "descriptors need a connected molecule");
  DescriptorVector d;
  auto set = [&](std::string_view id, double v) { d.values[static_cast<std::size_t>(descriptor_index(id))] = v; };

  double mw = 0.0, exact = 0.0, valence = 0.0;
  int heavy = 0, nhoh = 0, no = 0, carbons = 0, csp3 = 0, donors = 0;
  for (int a = 0; a < g.atom_count(); ++a) {
    const auto& inf = chem::info(g.element(a));
    mw += inf.atomic_mass;
    exact += inf.monoisotopic_mass;
    valence += inf.valence_electrons;
    if (g.is_hydrogen(a)) continue;
    ++heavy;
    if (is_n_or_o(g.element(a))) {
      ++no;
      nhoh += g.hydrogen_count(a);
      if (g.hydrogen_count(a) > 0) ++donors;
    }
    if (g.element(a) == Element::C) {
      ++carbons;
      bool all_single = true;
      for (int b : g.neighbors(a)) all_single = all_single && g.multiplicity(a, b) == 1;
      if (all_single) ++csp3;
    }
  }
  set("molecular_weight", mw);
  set("exact_molecular_weight", exact);
  set("heavy_atom_count", heavy);
  set("valence_electron_count", valence);
  set("nhoh_count", nhoh);
  set("no_count", no);
  set("fraction_csp3", carbons ? static_cast<double>(csp3) / carbons : 0.0);
  set("h_bond_donors", donors);
  set("h_bond_acceptors", no);

  const HeavyGraph h = heavy_graph(g);
  set("balaban_j", balaban_j(h));

  const auto simple = topo::SimpleGraph::from_mol(g);
  const auto bridge = topo::simple_bridges(simple);
  const auto bonds = g.bonds();
  int rotatable = 0;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    const auto& b = bonds[i];
    if (b.order != 1 || !bridge[i] || g.is_hydrogen(b.a) || g.is_hydrogen(b.b)) continue;
    if (g.heavy_neighbor_count(b.a) >= 2 && g.heavy_neighbor_count(b.b) >= 2) ++rotatable;
  }
  set("rotatable_bonds", rotatable);

  const auto cycles = topo::min_cycle_basis(g);
  std::vector<bool> in_three_ring(static_cast<std::size_t>(g.atom_count()), false);
  int saturated = 0;
  for (const auto& c : cycles.cycles) {
    bool all_single = true;
    for (int e : c) {
      const auto& b = bonds[static_cast<std::size_t>(e)];
      all_single = all_single && b.order == 1;
      if (c.size() == 3) {
        in_three_ring[static_cast<std::size_t>(b.a)] = true;
        in_three_ring[static_cast<std::size_t>(b.b)] = true;
      }
    }
    if (all_single) ++saturated;
  }
  double tpsa = 0.0;
  for (int a = 0; a < g.atom_count(); ++a) tpsa += tpsa_contribution(g, a, in_three_ring[static_cast<std::size_t>(a)]);
  set("tpsa", tpsa);

  const int rings = static_cast<int>(cycles.cycles.size());
  const int aromatic = aromatic_ring_count(g);
  set("aromatic_rings", aromatic);
  set("aliphatic_rings", rings - aromatic);
  set("ring_count", rings);
  set("saturated_rings", saturated);

  double chi0 = 0.0, chi1 = 0.0, chi0n = 0.0, chi2n = 0.0, chi3n = 0.0;
  const std::size_t hn = h.atoms.size();
  std::vector<double> dv(hn);
  for (std::size_t i = 0; i < hn; ++i) {
    chi0 += inv_sqrt_or_zero(static_cast<double>(h.adj[i].size()));
    dv[i] = delta_v(g, h.atoms[i]);
    chi0n += inv_sqrt_or_zero(dv[i]);
  }
  for (std::size_t i = 0; i < hn; ++i) {
    for (int j : h.adj[i]) {
      if (static_cast<int>(i) < j) {
        chi1 += inv_sqrt_or_zero(static_cast<double>(h.adj[i].size() * h.adj[static_cast<std::size_t>(j)].size()));
      }
    }
    const auto& nb = h.adj[i];
    for (std::size_t x = 0; x < nb.size(); ++x) {
      for (std::size_t y = x + 1; y < nb.size(); ++y) {
        chi2n += inv_sqrt_or_zero(dv[static_cast<std::size_t>(nb[x])] * dv[i] * dv[static_cast<std::size_t>(nb[y])]);
      }
    }
  }
  for (std::size_t j = 0; j < hn; ++j) {
    for (int k : h.adj[j]) {
      if (static_cast<int>(j) >= k) continue;
      for (int i : h.adj[j]) {
        if (i == k) continue;
        for (int l : h.adj[static_cast<std::size_t>(k)]) {
          if (l == static_cast<int>(j) || l == i) continue;
          chi3n += inv_sqrt_or_zero(dv[static_cast<std::size_t>(i)] * dv[j] * dv[static_cast<std::size_t>(k)] *
                                    dv[static_cast<std::size_t>(l)]);
        }
      }
    }
  }
  set("chi0", chi0);
  set("chi1", chi1);
  set("chi0n", chi0n);
  set("chi2n", chi2n);
  set("chi3n", chi3n);
  return d;
}

std::array<std::vector<double>, kDescriptorCount> descriptor_samples(const std::vector<MolGraph>& mols, int workers) {
  std::vector<DescriptorVector> per(mols.size());
  std::vector<feat::Fingerprint> fps(mols.size());
  parallel_for(mols.size(), default_workers(static_cast<std::size_t>(std::max(1, workers))), [&](std::size_t i) {
    per[i] = descriptors(mols[i]);
    fps[i] = feat::fingerprint(mols[i]);
  });
  std::array<std::vector<double>, kDescriptorCount> out;
  for (int d = 0; d < kDescriptorCount; ++d) {
    if (d == kInternalSimilarity) continue;
    auto& v = out[static_cast<std::size_t>(d)];
    v.reserve(mols.size());
    for (const auto& p : per) v.push_back(p.values[static_cast<std::size_t>(d)]);
  }
  // A single molecule is only similar to itself.
  auto& sim = out[static_cast<std::size_t>(kInternalSimilarity)];
  if (fps.size() == 1) sim.push_back(1.0);
  for (std::size_t i = 0; i < fps.size(); ++i) {
    for (std::size_t j = i + 1; j < fps.size(); ++j) sim.push_back(feat::tanimoto(fps[i], fps[j]));
  }
  return out;
}

}  // namespace molswap::eval
