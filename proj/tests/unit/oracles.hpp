// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "chem/molgraph.hpp"
#include "chem/smiles.hpp"
#include "common/rng.hpp"
#include "diffusion/des.hpp"
#include "featurize/features.hpp"
#include "neural/model.hpp"
#include "neural/tape.hpp"

namespace molswap::testing {

using diffusion::DesMove;
using nn::ModelKind;
using nn::ModelWeights;
using nn::Tape;

// Oracle: every ordered quadruple checked directly on a copy of the
// multiplicity matrix, connectivity by BFS.
inline std::set<std::array<int, 4>> brute_force_keys(const chem::MolGraph& g, std::size_t* ordered_count) {
  const int n = g.atom_count();
  std::set<std::array<int, 4>> keys;
  std::size_t count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          if (i == j || i == k || i == l || j == k || j == l || k == l) continue;
          if (g.multiplicity(i, j) == 0 || g.multiplicity(k, l) == 0) continue;
          if (g.multiplicity(i, k) + 1 > 3 || g.multiplicity(j, l) + 1 > 3) continue;
          std::vector<std::vector<int>> m(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
          for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = g.multiplicity(a, b);
          }
          auto bump = [&](int a, int b, int d) {
            m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += d;
            m[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] += d;
          };
          bump(i, j, -1);
          bump(k, l, -1);
          bump(i, k, 1);
          bump(j, l, 1);
          std::vector<bool> seen(static_cast<std::size_t>(n), false);
          std::vector<int> todo{0};
          seen[0] = true;
          int reached = 1;
          while (!todo.empty()) {
            const int a = todo.back();
            todo.pop_back();
            for (int b = 0; b < n; ++b) {
              if (m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] > 0 && !seen[static_cast<std::size_t>(b)]) {
                seen[static_cast<std::size_t>(b)] = true;
                ++reached;
                todo.push_back(b);
              }
            }
          }
          if (reached != n) continue;
          ++count;
          keys.insert(DesMove{i, j, k, l}.canonical_key());
        }
      }
    }
  }
  *ordered_count = count;
  return keys;
}

struct Example {
  chem::MolGraph g0;
  chem::MolGraph gt;
  diffusion::DesMove forward;
  feat::FeatureBundle f;
  std::vector<diffusion::DesMove> feasible;
  feat::Fingerprint fp;
};

inline Example six_atom_example() {
  Example e;
  e.g0 = chem::parse_smiles("C=NO");  // 6 atoms with hydrogens
  const auto st = diffusion::noise_step(e.g0, 3);
  e.gt = st.graph;
  e.forward = st.move;
  e.f = feat::featurize(e.gt, 0.4);
  e.feasible = diffusion::enumerate_feasible(e.gt);
  e.fp = feat::fingerprint(e.gt);
  return e;
}

inline void perturb(ModelWeights& w, std::uint64_t seed) {
  // Zero-initialized tensors would hide paths from the gradient check.
  Rng rng(seed);
  for (auto& p : w.params()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += 0.05 * (rng.uniform() - 0.5);
  }
}

inline double example_loss(ModelWeights& w, const Example& e, bool fps, bool backward) {
  Tape tape;
  Tape::Var loss;
  if (w.kind() == ModelKind::kDiffusion) {
    const auto s = diffusion_forward(tape, e.f, w, fps ? &e.fp : nullptr);
    loss = diffusion_loss(tape, s, e.f, e.g0, e.feasible, e.forward.reversed(), {}, nullptr);
  } else {
    loss = time_loss(tape, time_forward(tape, e.f, w, fps ? &e.fp : nullptr), 0.4);
  }
  if (backward) {
    w.zero_grad();
    tape.backward(loss);
  }
  return tape.scalar(loss);
}

// Central differences with step 1e-5 on a handful of entries of every
// parameter tensor.
inline double worst_gradient_error(ModelWeights& w, const Example& e, bool fps) {
  example_loss(w, e, fps, true);
  double worst = 0.0;
  for (auto& p : w.params()) {
    Rng rng(hash_string(p.name));
    for (int s = 0; s < 3; ++s) {
      const Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
      const double x = p.value.data()[i];
      const double h = 1e-5;
      p.value.data()[i] = x + h;
      const double up = example_loss(w, e, fps, false);
      p.value.data()[i] = x - h;
      const double down = example_loss(w, e, fps, false);
      p.value.data()[i] = x;
      const double fd = (up - down) / (2 * h);
      const double an = p.grad.data()[i];
      const double scale = std::abs(fd) + std::abs(an);
      if (scale < 1e-9) continue;
      worst = std::max(worst, std::abs(fd - an) / scale);
    }
  }
  return worst;
}

}  // namespace molswap::testing
