// SPDX-License-Identifier: Apache-2.0
#include "diffusion/des.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace molswap::diffusion {

std::array<int, 4> DesMove::canonical_key() const {
  return std::min({std::array<int, 4>{i, j, k, l}, std::array<int, 4>{j, i, l, k}, std::array<int, 4>{k, l, i, j},
                   std::array<int, 4>{l, k, j, i}});
}

bool locally_feasible(const MolGraph& g, const DesMove& m) {
  const int n = g.atom_count();
  for (int v : {m.i, m.j, m.k, m.l}) {
    if (v < 0 || v >= n) return false;
  }
  if (m.i == m.j || m.i == m.k || m.i == m.l || m.j == m.k || m.j == m.l || m.k == m.l) return false;
  if (!g.bonded(m.i, m.j) || !g.bonded(m.k, m.l)) return false;
  return g.multiplicity(m.i, m.k) < chem::MolGraph::kMaxMultiplicity &&
         g.multiplicity(m.j, m.l) < chem::MolGraph::kMaxMultiplicity;
}

namespace {

MolGraph rewire(const MolGraph& g, const DesMove& m) {
  MolGraph out = g;
  out.set_multiplicity(m.i, m.j, g.multiplicity(m.i, m.j) - 1);
  out.set_multiplicity(m.k, m.l, g.multiplicity(m.k, m.l) - 1);
  out.set_multiplicity(m.i, m.k, g.multiplicity(m.i, m.k) + 1);
  out.set_multiplicity(m.j, m.l, g.multiplicity(m.j, m.l) + 1);
  return out;
}

// Connectivity of g after the move without materializing it: only edges
// (i,j) and (k,l) can disappear.
bool connected_after(const MolGraph& g, const DesMove& m) {
  const int n = g.atom_count();
  auto removed = [&](int a, int b) {
    auto gone = [&](int x, int y) {
      return ((a == x && b == y) || (a == y && b == x)) && g.multiplicity(x, y) == 1;
    };
    return gone(m.i, m.j) || gone(m.k, m.l);
  };
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  auto visit = [&](int u) {
    if (!seen[static_cast<std::size_t>(u)]) {
      seen[static_cast<std::size_t>(u)] = true;
      ++count;
      stack.push_back(u);
    }
  };
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : g.neighbors(v)) {
      if (!removed(v, u)) visit(u);
    }
    if (v == m.i) visit(m.k);
    if (v == m.k) visit(m.i);
    if (v == m.j) visit(m.l);
    if (v == m.l) visit(m.j);
  }
  return count == n;
}

}  // namespace

bool feasible(const MolGraph& g, const DesMove& m) { return locally_feasible(g, m) && connected_after(g, m); }

MolGraph apply(const MolGraph& g, const DesMove& m) {
  if (!feasible(g, m)) {
    fail(ErrorCode::kInfeasibleMove, "move (" + std::to_string(m.i) + "," + std::to_string(m.j) + "," +
                                         std::to_string(m.k) + "," + std::to_string(m.l) + ") is not feasible");
  }
  return rewire(g, m);
}

std::vector<DesMove> enumerate_feasible(const MolGraph& g) {
  const auto bonds = g.bonds();
  std::vector<DesMove> out;
  for (std::size_t x = 0; x < bonds.size(); ++x) {
    for (std::size_t y = x + 1; y < bonds.size(); ++y) {
      const auto& p = bonds[x];
      const auto& q = bonds[y];
      for (const DesMove m : {DesMove{p.a, p.b, q.a, q.b}, DesMove{p.a, p.b, q.b, q.a}}) {
        if (feasible(g, m)) out.push_back(m);
      }
    }
  }
  return out;
}

StepResult noise_step(const MolGraph& g, Rng& rng) {
  const auto bonds = g.bonds();
  const std::uint64_t nb = bonds.size();
  if (nb >= 2) {
    for (int attempt = 0; attempt < kMaxProposals; ++attempt) {
      // Uniform over unordered bond pairs and the two rewirings.
      std::uint64_t x = rng.below(nb);
      std::uint64_t y = rng.below(nb - 1);
      if (y >= x) ++y;
      if (x > y) std::swap(x, y);
      const auto& p = bonds[x];
      const auto& q = bonds[y];
      const DesMove m = rng.below(2) == 0 ? DesMove{p.a, p.b, q.a, q.b} : DesMove{p.a, p.b, q.b, q.a};
      if (!locally_feasible(g, m)) continue;
      if (!connected_after(g, m)) continue;
      return {rewire(g, m), m};
    }
  }
  const auto moves = enumerate_feasible(g);
  if (moves.empty()) fail(ErrorCode::kNoFeasibleMove, "graph admits no feasible double edge swap");
  const DesMove m = moves[rng.below(moves.size())];
  return {rewire(g, m), m};
}

StepResult noise_step(const MolGraph& g, std::uint64_t seed) {
  Rng rng(seed);
  return noise_step(g, rng);
}

int default_steps(const MolGraph& g, double factor) {
  return static_cast<int>(std::ceil(factor * g.bond_units() - 1e-9));
}

Trajectory noise_trajectory(const MolGraph& g0, std::optional<int> steps, std::uint64_t seed, double steps_factor) {
  if (g0.empty() || chem::component_count(g0) != 1) {
    fail(ErrorCode::kNotConnected, "noise_trajectory requires a connected graph");
  }
  const int total = steps.value_or(default_steps(g0, steps_factor));
  if (total < 0) fail(ErrorCode::kInvalidArgument, "negative step count");
  Trajectory tr;
  tr.planned_steps = total;
  tr.states.push_back(g0);
  tr.times.push_back(0.0);
  Rng rng(seed);
  for (int s = 1; s <= total; ++s) {
    try {
      StepResult r = noise_step(tr.states.back(), rng);
      tr.states.push_back(std::move(r.graph));
      tr.moves.push_back(r.move);
      tr.times.push_back(static_cast<double>(s) / total);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoFeasibleMove) throw;
      tr.truncated = true;
      break;
    }
  }
  return tr;
}

}  // namespace molswap::diffusion
