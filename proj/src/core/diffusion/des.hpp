// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "chem/molgraph.hpp"
#include "common/rng.hpp"

namespace molswap::diffusion {

using chem::MolGraph;

// Double edge swap: remove (i,j) and (k,l), add (i,k) and (j,l).
struct DesMove {
  int i = 0, j = 0, k = 0, l = 0;

  // The same rewiring is described by four index tuples; the key is the
  // smallest of them.
  std::array<int, 4> canonical_key() const;
  DesMove reversed() const { return {i, k, j, l}; }

  friend bool operator==(const DesMove& a, const DesMove& b) { return a.canonical_key() == b.canonical_key(); }
};

// Conditions 1-3: distinct atoms, both removed bonds present, added bonds
// stay at or below a triple bond.
bool locally_feasible(const MolGraph& g, const DesMove& m);
// Conditions 1-4: additionally the result is connected.
bool feasible(const MolGraph& g, const DesMove& m);

// Throws kInfeasibleMove.
MolGraph apply(const MolGraph& g, const DesMove& m);

// Every feasible move once; both rewirings of a bond pair are distinct moves.
std::vector<DesMove> enumerate_feasible(const MolGraph& g);

struct StepResult {
  MolGraph graph;
  DesMove move;
};

// Uniform over the feasible set: uniform proposals over (bond pair,
// rewiring) are rejected on conditions 1-3, then on connectivity. After
// kMaxProposals rejections the feasible set is enumerated and sampled
// directly. Throws kNoFeasibleMove.
inline constexpr int kMaxProposals = 256;
StepResult noise_step(const MolGraph& g, Rng& rng);
StepResult noise_step(const MolGraph& g, std::uint64_t seed);

struct Trajectory {
  std::vector<MolGraph> states;
  std::vector<DesMove> moves;
  std::vector<double> times;  // times[s] = s / planned_steps
  int planned_steps = 0;
  bool truncated = false;     // a state had no feasible move
};

inline constexpr double kDefaultStepsFactor = 0.25;
// Bond count for step lengths is total multiplicity, which swaps conserve.
int default_steps(const MolGraph& g, double factor = kDefaultStepsFactor);

Trajectory noise_trajectory(const MolGraph& g0, std::optional<int> steps, std::uint64_t seed,
                            double steps_factor = kDefaultStepsFactor);

}  // namespace molswap::diffusion
